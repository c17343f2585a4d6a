#include <string>
#include <vector>

#include "buypred/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return buypred::run_cli(args);
}
