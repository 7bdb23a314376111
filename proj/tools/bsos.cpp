#include <iostream>

#include "bsos/cli.hpp"

int main(int argc, char** argv) { return bsos::run_cli(argc, argv, std::cout, std::cerr); }
