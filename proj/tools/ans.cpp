#include <iostream>

#include "ans/cli.hpp"

int main(int argc, char** argv) { return ans::run_cli(argc, argv, std::cout, std::cerr); }
