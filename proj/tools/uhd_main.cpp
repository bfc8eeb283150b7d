#include <iostream>
#include <string>
#include <vector>

#include "uhd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return uhd::run_cli(args, std::cout, std::cerr);
}
