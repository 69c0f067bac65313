#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace prsplit {

using Counter4x64 = std::array<std::uint64_t, 4>;
using Key2x64 = std::array<std::uint64_t, 2>;

/// One block of the Philox-4x64 bijection with 10 rounds. Pure function of
/// (counter, key); bit-exact across platforms.
Counter4x64 philox4x64_10(Counter4x64 counter, Key2x64 key);

/// Counter-based random stream. The key is (seed, substream_id), so distinct
/// substreams are independent and a stream's output depends only on its own
/// consumption, never on scheduling. Single-owner: not safe to share across
/// threads, cheap to construct one per trial.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t substream_id)
      : key_{seed, substream_id} {}

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t substream_id() const { return key_[1]; }

  std::uint64_t next_u64();

  /// Uniform on (0, 1], 53-bit resolution. Never returns 0, so log() is safe.
  double next_uniform();

  /// Standard normal via Box-Muller; consumes two uniforms per pair.
  double next_gaussian();

 private:
  void refill();

  Key2x64 key_;
  std::uint64_t block_ = 0;
  Counter4x64 buffer_{};
  int pos_ = 4;  // buffer exhausted
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// n independent standard normal draws; advances the stream.
std::vector<double> gaussian_vector(RandomStream& stream, int n);

}  // namespace prsplit
