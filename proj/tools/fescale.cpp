#include <iostream>
#include <string>
#include <vector>

#include "fescale/cli.hpp"

int main(int argc, char** argv) {
  return fescale::cli::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
