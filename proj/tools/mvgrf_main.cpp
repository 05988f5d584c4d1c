#include "mvgrf/cli.hpp"

int main(int argc, char** argv) { return mvgrf::cli::run(argc, argv); }
