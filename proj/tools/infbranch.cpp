#include <iostream>

#include "infbranch/cli.hpp"

int main(int argc, char** argv) { return infbranch::run_cli(argc, argv, std::cout, std::cerr); }
