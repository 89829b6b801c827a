#include <iostream>
#include <string>
#include <vector>

#include "grid5g/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return grid5g::run_cli(args, std::cout, std::cerr);
}
