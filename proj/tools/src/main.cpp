#include <iostream>

#include "acrst/cli.hpp"

int main(int argc, char** argv) { return acrst::cli::run_cli(argc, argv, std::cout, std::cerr); }
