#include <iostream>

#include "texp/cli.hpp"

int main(int argc, char** argv) { return texp::cli::run(argc, argv, std::cout, std::cerr); }
