#include <iostream>

#include "mcfse/cli.hpp"

int main(int argc, char** argv) { return mcfse::run_cli(argc, argv, std::cout, std::cerr); }
