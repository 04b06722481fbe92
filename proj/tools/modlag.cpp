#include "modlag/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return modlag::run_cli(argc, argv, std::cout, std::cerr); }
