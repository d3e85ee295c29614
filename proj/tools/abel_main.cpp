#include <string>
#include <vector>

#include "abel/harness/cli.hpp"

int main(int argc, char** argv) {
  return abel::harness::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
