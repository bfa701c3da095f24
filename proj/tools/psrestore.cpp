#include <iostream>
#include <string>
#include <vector>

#include "psr/cli.hpp"

int main(int argc, char** argv) {
  return psr::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
