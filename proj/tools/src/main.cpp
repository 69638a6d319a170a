#include <iostream>

#include "qsgd_cli/cli.hpp"

int main(int argc, char** argv) {
  return qsgd::cli::run(argc, argv, std::cin, std::cout, std::cerr);
}
