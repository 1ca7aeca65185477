#include <iostream>

#include "lighttbnet/cli.hpp"

int main(int argc, char** argv) { return ltbn::run_cli(argc, argv, std::cout, std::cerr); }
