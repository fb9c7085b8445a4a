#include <string>
#include <vector>

#include "sngm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sngm::cli_main(args);
}
