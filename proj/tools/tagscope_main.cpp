#include <iostream>
#include <string>
#include <vector>

#include "tagscope/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tagscope::run_cli(args, std::cout, std::cerr);
}
