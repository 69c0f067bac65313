#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "prsplit/model.hpp"
#include "prsplit/theory.hpp"

using namespace prsplit;

namespace {

GroundTruth unit_truth(RandomStream& s, int n, double rho) {
  return {sample_unit_vector(s, n), rho};
}

// Unsplit least-squares objective (1/4m) sum (y^2 - (a.z)^2)^2, evaluated
// directly; f(z, z) must agree with it.
double unsplit_objective(const MeasurementEnsemble& ens, const Vec& z) {
  double acc = 0.0;
  for (int k = 0; k < ens.m(); ++k) {
    const double s = dot(ens.row(k), z);
    const double r = ens.y(k) * ens.y(k) - s * s;
    acc += r * r;
  }
  return acc / (4.0 * ens.m());
}

}  // namespace

TEST_CASE("ground truth validates its inputs") {
  CHECK_THROWS_AS(GroundTruth({0.0, 0.0}, 1.0), InvalidConfig);
  CHECK_THROWS_AS(GroundTruth({}, 1.0), InvalidConfig);
  CHECK_THROWS_AS(GroundTruth({1.0}, -1.0), InvalidConfig);

  const GroundTruth t({3.0, 4.0}, 2.0);
  CHECK(t.norm_x() == doctest::Approx(5.0));
  CHECK(t.sigma() == doctest::Approx(25.0 / 3.0));
  CHECK(t.block_lipschitz() == doctest::Approx(102.0));
}

TEST_CASE("generated magnitudes follow y = |a.x|") {
  const Vec x{2.0, 0.0};
  const MeasurementEnsemble ens = ensemble_from_rows(x, {{1.0, 0.0}, {-1.5, 2.0}, {0.0, 7.0}});
  CHECK(ens.y(0) == doctest::Approx(2.0));
  CHECK(ens.y(1) == doctest::Approx(3.0));
  CHECK(ens.y(2) == doctest::Approx(0.0));

  // coordinate pick-off: x = e1, first row component 2 -> y = 2
  const MeasurementEnsemble pick = ensemble_from_rows({1.0, 0.0, 0.0}, {{2.0, -5.0, 1.0}});
  CHECK(pick.y(0) == doctest::Approx(2.0));
}

TEST_CASE("mean of y^2 estimates ||x||^2") {
  RandomStream s(101, 0);
  const GroundTruth truth = unit_truth(s, 4, 1.0);
  RandomStream ms(101, 1);
  const int m = 1000000;
  const MeasurementEnsemble ens = generate_ensemble(truth, m, ms);
  CompensatedSum acc;
  for (int k = 0; k < m; ++k) acc.add(ens.y(k) * ens.y(k));
  const double mean = acc.value() / m;
  // Var((a.x)^2) = 2||x||^4 for unit normals; 4 standard errors.
  const double se = std::sqrt(2.0) / std::sqrt(static_cast<double>(m));
  CHECK(std::abs(mean - 1.0) <= 4.0 * se);
}

TEST_CASE("f_finite hand values") {
  RandomStream s(103, 0);
  const GroundTruth truth = unit_truth(s, 5, 1.0);
  RandomStream ms(103, 1);
  const MeasurementEnsemble ens = generate_ensemble(truth, 40, ms);

  CHECK(std::abs(f_finite(ens, {truth.x(), truth.x()})) <= 1e-14);

  // (x, -x): every residual doubles, (2 y^2)^2 / 4 = y^4
  double y4 = 0.0;
  for (int k = 0; k < ens.m(); ++k) y4 += std::pow(ens.y(k), 4.0);
  CHECK(f_finite(ens, {truth.x(), scaled(truth.x(), -1.0)}) ==
        doctest::Approx(y4 / ens.m()).epsilon(1e-12));

  // single measurement a = (1, 0), y = 2, z = (1, 0), w = (3, 0): (4-3)^2/4
  const MeasurementEnsemble single = ensemble_from_rows({2.0, 0.0}, {{1.0, 0.0}});
  CHECK(f_finite(single, {{1.0, 0.0}, {3.0, 0.0}}) == doctest::Approx(0.25));
}

TEST_CASE("f_finite symmetry, nonnegativity, unsplit identity") {
  RandomStream s(107, 0);
  const GroundTruth truth = unit_truth(s, 4, 2.0);
  RandomStream ms(107, 1);
  const MeasurementEnsemble ens = generate_ensemble(truth, 25, ms);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec z = gaussian_vector(s, 4);
    const Vec w = gaussian_vector(s, 4);
    const double fzw = f_finite(ens, {z, w});
    CHECK(fzw >= 0.0);
    CHECK(fzw == doctest::Approx(f_finite(ens, {w, z})).epsilon(1e-14));
    CHECK(f_finite(ens, {z, z}) == doctest::Approx(unsplit_objective(ens, z)).epsilon(1e-13));
  }
}

TEST_CASE("grad_f_finite vanishes at the truth and collapses when z = w") {
  RandomStream s(109, 0);
  const GroundTruth truth = unit_truth(s, 6, 1.0);
  RandomStream ms(109, 1);
  const MeasurementEnsemble ens = generate_ensemble(truth, 30, ms);

  const auto [gz0, gw0] = grad_f_finite(ens, {truth.x(), truth.x()});
  CHECK(norm(gz0) <= 1e-14);
  CHECK(norm(gw0) <= 1e-14);

  const Vec v = gaussian_vector(s, 6);
  const auto [gz, gw] = grad_f_finite(ens, {v, v});
  CHECK(dist(gz, gw) <= 1e-14 * std::max(1.0, norm(gz)));
}

TEST_CASE("grad_f_finite matches central finite differences") {
  RandomStream s(113, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const GroundTruth truth = unit_truth(s, 3, 1.0);
    const MeasurementEnsemble ens = generate_ensemble(truth, 5, s);
    const EstimatePair p{gaussian_vector(s, 3), gaussian_vector(s, 3)};
    const auto [gz, gw] = grad_f_finite(ens, p);
    const auto f = [&](const EstimatePair& q) { return f_finite(ens, q); };
    const auto [fz, fw] = oracles::fd_gradient(f, p, 1e-5);
    const double scale = std::max({norm(gz), norm(gw), 1e-6});
    CHECK(dist(gz, fz) <= 1e-6 * scale);
    CHECK(dist(gw, fw) <= 1e-6 * scale);
  }
}

TEST_CASE("g_expected closed-form anchor points") {
  RandomStream s(127, 0);
  const GroundTruth truth = unit_truth(s, 7, 2.5);
  CHECK(std::abs(g_expected(truth, {truth.x(), truth.x()})) <= 1e-14);
  CHECK(g_expected(truth, {zeros(7), zeros(7)}) == doctest::Approx(1.5));

  // n=2, x=e1, rho=0, z=w=0.5 e1
  const GroundTruth t2({1.0, 0.0}, 0.0);
  const Vec half{0.5, 0.0};
  CHECK(g_expected(t2, {half, half}) == doctest::Approx(0.84375).epsilon(1e-15));
}

TEST_CASE("g_expected symmetries") {
  RandomStream s(131, 0);
  const Vec x = sample_unit_vector(s, 5);
  const GroundTruth truth(x, 1.7);
  const GroundTruth flipped(scaled(x, -1.0), 1.7);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec z = gaussian_vector(s, 5);
    const Vec w = gaussian_vector(s, 5);
    CHECK(g_expected(truth, {z, w}) == doctest::Approx(g_expected(truth, {w, z})).epsilon(1e-13));
    // g depends on x only through x.z x.w and ||x||^2
    CHECK(g_expected(truth, {z, w}) == doctest::Approx(g_expected(flipped, {z, w})).epsilon(1e-13));
  }
}

TEST_CASE("grad_g matches central finite differences on 100 points") {
  RandomStream s(137, 0);
  const GroundTruth truth = unit_truth(s, 6, 27.0 / 8.0);
  const auto g = [&](const EstimatePair& q) { return g_expected(truth, q); };
  for (int trial = 0; trial < 100; ++trial) {
    Vec z = truth.x(), w = truth.x();
    axpy(0.5, gaussian_vector(s, 6), z);
    axpy(0.5, gaussian_vector(s, 6), w);
    const EstimatePair p{z, w};
    const auto [gz, gw] = grad_g(truth, p);
    const auto [fz, fw] = oracles::fd_gradient(g, p, 1e-5);
    const double scale = std::max({norm(gz), norm(gw), 1e-3});
    CHECK(dist(gz, fz) <= 1e-6 * scale);
    CHECK(dist(gw, fw) <= 1e-6 * scale);
  }

  const auto [gx, gw] = grad_g(truth, {truth.x(), truth.x()});
  CHECK(norm(gx) <= 1e-14);
  CHECK(norm(gw) <= 1e-14);
}

TEST_CASE("hessian quadratic form anchor values") {
  RandomStream s(139, 0);
  const Vec x = sample_unit_vector(s, 5);
  for (const double rho : {0.0, 1.0, 27.0 / 8.0}) {
    const GroundTruth truth(x, rho);
    // h perpendicular to x, shared across blocks: value 2||x||^2 at (x, x)
    Vec h = gaussian_vector(s, 5);
    axpy(-dot(h, x), x, h);
    const double nh = norm(h);
    for (auto& v : h) v /= nh;
    CHECK(hessian_quadratic_form(truth, {x, x}, h, h) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(hessian_quadratic_form(truth, {x, x}, zeros(5), zeros(5)) == 0.0);
  }
}

TEST_CASE("hessian quadratic form matches half the second difference") {
  RandomStream s(149, 0);
  const GroundTruth truth = unit_truth(s, 5, 27.0 / 8.0);
  const auto g = [&](const EstimatePair& q) { return g_expected(truth, q); };
  for (int trial = 0; trial < 100; ++trial) {
    Vec z = truth.x(), w = truth.x();
    axpy(0.3, gaussian_vector(s, 5), z);
    axpy(0.3, gaussian_vector(s, 5), w);
    const EstimatePair p{z, w};
    const Vec hz = sample_unit_vector(s, 5);
    const Vec hw = sample_unit_vector(s, 5);
    const double form = hessian_quadratic_form(truth, p, hz, hw);
    const double fd = oracles::fd_half_second_difference(g, p, hz, hw, 1e-4);
    CHECK(std::abs(form - fd) <= 1e-5 * std::max(1.0, std::abs(form)));
  }
}

TEST_CASE("assembled hessian agrees with the quadratic form") {
  RandomStream s(151, 0);
  const GroundTruth truth = unit_truth(s, 4, 1.3);
  for (int trial = 0; trial < 50; ++trial) {
    const EstimatePair p{gaussian_vector(s, 4), gaussian_vector(s, 4)};
    const SymMat h = assemble_hessian(truth, p);
    const Vec hz = gaussian_vector(s, 4);
    const Vec hw = gaussian_vector(s, 4);
    Vec stacked(8);
    for (int i = 0; i < 4; ++i) {
      stacked[i] = hz[i];
      stacked[4 + i] = hw[i];
    }
    const double quad = dot(stacked, h.apply(stacked));
    CHECK(std::abs(quad - hessian_quadratic_form(truth, p, hz, hw)) <= 1e-10);
  }
}

TEST_CASE("scalar assembled hessian by hand") {
  // x = 1, z = w = 1, rho = 1: blocks [[2, 1], [1, 2]]
  const GroundTruth truth(Vec{1.0}, 1.0);
  const SymMat h = assemble_hessian(truth, {{1.0}, {1.0}});
  CHECK(h(0, 0) == doctest::Approx(2.0));
  CHECK(h(0, 1) == doctest::Approx(1.0));
  CHECK(h(1, 0) == doctest::Approx(1.0));
  CHECK(h(1, 1) == doctest::Approx(2.0));
  CHECK(min_eigenvalue(h) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hessian floor at the truth point") {
  RandomStream s(157, 0);
  for (const double rho : {1.0, 2.0, 27.0 / 8.0}) {
    const GroundTruth truth = unit_truth(s, 6, rho);  // rho >= ||x||^2 = 1
    const SymMat h = assemble_hessian(truth, {truth.x(), truth.x()});
    CHECK(min_eigenvalue(h) >= 1.0 / 3.0 - 1e-10);
  }
}

TEST_CASE("basin membership is inclusive at the boundary") {
  const Vec x{2.0, 0.0, 0.0};
  const GroundTruth truth(x, 1.0);  // ||x|| = 2, radius 0.25

  CHECK(in_basin(truth, {x, x}));
  CHECK_FALSE(in_basin(truth, {scaled(x, 1.2), x}));  // 0.4 > 0.25

  Vec boundary = x;
  boundary[1] += 0.25;  // exactly ||x||/8 away
  CHECK(in_basin(truth, {boundary, x}));
  CHECK(in_basin(truth, {x, boundary}));
  boundary[1] += 1e-9;
  CHECK_FALSE(in_basin(truth, {boundary, x}));
}

TEST_CASE("fresh-sample mean of the split objective matches the closed form") {
  // The closed form of g carries twice the expectation of the plain
  // finite-sample objective, so the independent estimator averages
  // residual^2 / 2 per draw and adds the penalty separately.
  RandomStream s(163, 0);
  const GroundTruth truth({0.8, -0.6}, 1.25);
  const Vec z{0.55, -0.75};
  const Vec w{1.1, -0.2};
  const long samples = 1000000;

  double mean = 0.0, m2 = 0.0;
  Vec a(2);
  for (long k = 1; k <= samples; ++k) {
    a[0] = s.next_gaussian();
    a[1] = s.next_gaussian();
    const double ax = dot(a, truth.x());
    const double r = ax * ax - dot(a, z) * dot(a, w);
    const double v = 0.5 * r * r;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  const double se = std::sqrt(m2 / (samples - 1.0) / samples);
  double pen = 0.0;
  for (int i = 0; i < 2; ++i) pen += (z[i] - w[i]) * (z[i] - w[i]);
  const double target = g_expected(truth, {z, w}) - 0.5 * truth.rho() * pen;
  CHECK(std::abs(mean - target) <= 4.0 * se);
}
