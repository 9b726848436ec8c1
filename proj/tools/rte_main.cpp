#include <iostream>

#include "rte/cli.hpp"

int main(int argc, char** argv) { return rte::cli::run(argc, argv, std::cout, std::cerr); }
