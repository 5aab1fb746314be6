#include <iostream>

#include "vpa/cli.hpp"

int main(int argc, char** argv) { return vpa::cli::run(argc, argv, std::cout, std::cerr); }
