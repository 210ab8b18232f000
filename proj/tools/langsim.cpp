#include <string>
#include <vector>

#include "langsim/cli.hpp"

int main(int argc, char** argv) {
  return langsim::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
