#include <iostream>

#include "fedcy/cli.hpp"

int main(int argc, char** argv) { return fedcy::cli::run(argc, argv, std::cout, std::cerr); }
