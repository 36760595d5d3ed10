#include <iostream>

#include "cdslice/cli/cli.hpp"

int main(int argc, char** argv) { return cdslice::cli::run(argc, argv, std::cout, std::cerr); }
