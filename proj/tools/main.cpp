#include <iostream>

#include "chromaeeg/cli.hpp"

int main(int argc, char** argv) { return chromaeeg::run_cli(argc, argv, std::cout, std::cerr); }
