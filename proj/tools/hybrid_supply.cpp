#include <iostream>

#include "hybrid/cli.hpp"

int main(int argc, char** argv) { return hybrid::cli_dispatch(argc, argv, std::cout, std::cerr); }
