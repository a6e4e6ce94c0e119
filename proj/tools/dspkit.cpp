#include <iostream>

#include "dspkit/cli.hpp"

int main(int argc, char** argv) { return dspkit::cli::run(argc, argv, std::cout, std::cerr); }
