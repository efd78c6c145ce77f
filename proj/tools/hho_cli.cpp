#include "hho/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hho::run_cli(argc, argv, std::cout, std::cerr); }
