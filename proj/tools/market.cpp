#include <iostream>

#include "market/cli.hpp"

int main(int argc, char** argv) { return market::cli::run(argc, argv, std::cout, std::cerr); }
