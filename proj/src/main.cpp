#include <iostream>

#include "photostyle/cli.hpp"

int main(int argc, char** argv) {
  return photostyle::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
