#include <iostream>
#include <string>
#include <vector>

#include "flipbench/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return flipbench::dispatch(args, std::cout, std::cerr);
}
