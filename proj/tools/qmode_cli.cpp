#include <iostream>

#include "qmode/cli.hpp"

int main(int argc, char** argv) { return qmode::cli::run(argc, argv, std::cout, std::cerr); }
