#include "metadiv/harness/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return metadiv::harness::cli(argc, argv, std::cout, std::cerr); }
