// Regenerates data/demo_cascade.txt from the built-in demonstration cascade.
#include <iostream>

#include "photostyle/facedetect.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: write_demo_cascade <path>\n";
    return 2;
  }
  photostyle::save_cascade(photostyle::demo_cascade(), argv[1]);
  return 0;
}
