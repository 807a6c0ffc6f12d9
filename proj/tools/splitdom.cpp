#include "splitdom/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return splitdom::run_cli(argc, argv, std::cout, std::cerr); }
