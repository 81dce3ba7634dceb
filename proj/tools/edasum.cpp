#include <iostream>

#include "edasum/cli.hpp"

int main(int argc, char** argv) {
  return edasum::run_command(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
