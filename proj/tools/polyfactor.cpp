#include <iostream>
#include <string>
#include <vector>

#include <polyfactor/cli/cli.hpp>

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return polyfactor::cli::run(args, std::cout, std::cerr);
}
