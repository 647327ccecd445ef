#include <iostream>

#include "seqreg/cli.hpp"

int main(int argc, char **argv) { return seqreg::cli::run(argc, argv, std::cout, std::cerr); }
