#include <iostream>
#include <string>
#include <vector>

#include <subsaa/cli.hpp>

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return subsaa::run_cli(args, std::cout, std::cerr);
}
