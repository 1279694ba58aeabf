#include <iostream>

#include "kahan/cli.hpp"

int main(int argc, char** argv) { return kahan::cli::run_main(argc, argv, std::cout, std::cerr); }
