#include "labelmtl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return labelmtl::cli::run(argc, argv, std::cout, std::cerr); }
