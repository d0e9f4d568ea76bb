#include "cli_common.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return chronolm::cli::run_cli(std::move(args));
}
