// SPDX-License-Identifier: Apache-2.0

// Writes the built-in synthetic test picture as an 8-bit PGM.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tvae/errors.hpp"
#include "tvae/image.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write the synthetic test scene as a binary PGM", "tvae-scene"};
  std::string output;
  std::size_t size = 64;
  app.add_option("output", output, "Output PGM path")->required();
  app.add_option("--size", size, "Side length in pixels")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  try {
    tvae::write_pgm(output, tvae::synthetic_scene(size, size));
  } catch (const tvae::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
