#include "semg/cli.hpp"

int main(int argc, char** argv) { return semg::cli::dispatch(argc, argv); }
