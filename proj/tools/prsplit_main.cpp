#include "prsplit/cli.hpp"

int main(int argc, char** argv) { return prsplit::cli_main(argc, argv); }
