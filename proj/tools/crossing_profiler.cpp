#include <iostream>
#include <string>
#include <vector>

#include "hrgc/cli/app.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return hrgc::cli::run(args, std::cout, std::cerr);
}
