#include <iostream>

#include "piso/cli.hpp"

int main(int argc, char** argv) { return piso::run_cli(argc, argv, std::cout, std::cerr); }
