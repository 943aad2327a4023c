#include <string>
#include <vector>

#include "rankae/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rankae::cli::run(args);
}
