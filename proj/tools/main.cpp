#include <iostream>
#include <string>
#include <vector>

#include "field_sentry/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return field_sentry::cli::run(args, std::cout, std::cerr);
}
