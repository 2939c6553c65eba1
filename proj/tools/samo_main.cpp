#include <string>
#include <vector>

#include "samo/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return samo::run_cli(args);
}
