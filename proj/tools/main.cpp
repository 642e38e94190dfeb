#include <string>
#include <vector>

#include "blockmc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return blockmc::cli::cli_dispatch(args);
}
