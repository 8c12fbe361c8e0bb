#include <iostream>
#include <string>
#include <vector>

#include "rasterfusion/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rasterfusion::run_cli(args, std::cout, std::cerr);
}
