// Regenerates the shipped fixtures: make_fixtures [output-dir]

#include <filesystem>
#include <iostream>

#include "fixtures.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path root = argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::path("data");
  ptzlm::fixtures::write_all(root);
  std::cout << "wrote fixtures to " << root << "\n";
  return 0;
}
