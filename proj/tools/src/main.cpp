#include <iostream>

#include "lrvae_cli/cli.hpp"

int main(int argc, char** argv) { return lrvae::cli::run(argc, argv, std::cout, std::cerr); }
