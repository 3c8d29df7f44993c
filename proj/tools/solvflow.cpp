#include <iostream>

#include "solvflow/cli.hpp"

int main(int argc, char** argv) { return solvflow::cli::run(argc, argv, std::cout, std::cerr); }
