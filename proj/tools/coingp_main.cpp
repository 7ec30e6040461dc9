#include <iostream>

#include "coingp/cli.hpp"

int main(int argc, char** argv) { return coingp::cli::run(argc, argv, std::cout, std::cerr); }
