#include <iostream>

#include "veriaug/cli.hpp"

int main(int argc, char** argv) { return veriaug::run_cli(argc, argv, std::cout, std::cerr); }
