#include <iostream>
#include <string>
#include <vector>

#include "swei/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return swei::cli::run(args, std::cout, std::cerr);
}
