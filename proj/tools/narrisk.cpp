#include <iostream>

#include "narrisk/cli.hpp"

int main(int argc, char** argv) { return narrisk::cli::main(argc, argv, std::cout, std::cerr); }
