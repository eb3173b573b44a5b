#include <exception>
#include <iostream>

#include "wavets/cli.hpp"

int main(int argc, char** argv) {
  try {
    return wavets::cli::run_cli(argc, argv, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 1;
  }
}
