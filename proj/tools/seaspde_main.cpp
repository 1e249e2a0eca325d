#include <vector>
#include <string>

#include "seaspde/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return seaspde::run_cli(args);
}
