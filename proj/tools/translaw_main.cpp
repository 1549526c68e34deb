#include <iostream>
#include <vector>

#include "translaw/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return translaw::cli::run(args, std::cout, std::cerr);
}
