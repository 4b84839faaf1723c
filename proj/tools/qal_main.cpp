#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "qal/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qal::cli::run(args, std::cout, std::cerr, std::getenv("QAL_SEED"));
}
