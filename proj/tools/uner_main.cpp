#include <iostream>
#include <string>
#include <vector>

#include "uner/cli.hpp"

int main(int argc, char** argv) {
  return uner::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
