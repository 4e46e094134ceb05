#include <string>
#include <vector>

#include "bifrom/cli.hpp"

int main(int argc, char** argv) {
  return bifrom::pipeline::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
