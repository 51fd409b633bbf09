#include <iostream>

#include "pibench/benchcli.hpp"

int main(int argc, char** argv) { return pibench::benchcli::run_cli(argc, argv, std::cout, std::cerr); }
