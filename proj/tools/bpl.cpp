#include <iostream>

#include "bpl/cli.hpp"

int main(int argc, char** argv) { return bpl::cli::run_cli(argc, argv, std::cout, std::cerr); }
