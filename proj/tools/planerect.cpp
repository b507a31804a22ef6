#include <iostream>

#include "planerect/cli.hpp"

int main(int argc, char **argv) { return planerect::run_cli(argc, argv, std::cout, std::cerr); }
