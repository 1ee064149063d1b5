#include <iostream>

#include "marvel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return marvel::run_cli(args, std::cout, std::cerr);
}
