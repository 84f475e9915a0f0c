#include <iostream>

#include "rmm/cli.hpp"

int main(int argc, char** argv) { return rmm::cli::run(argc, argv, std::cout, std::cerr); }
