// SPDX-License-Identifier: Apache-2.0
//
// Real-valued grayscale images on the 0..255 scale and binary PGM (P5) IO.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tvae {

struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), pixels(h * w, fill) {}

  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  std::size_t size() const { return pixels.size(); }

  friend bool operator==(const Image&, const Image&) = default;
};

// Row-major per-pixel mask, 1 = observed.
struct PixelMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> observed;

  std::size_t missing_count() const;
};

// Reads a binary 8-bit PGM. Header comments are accepted. Throws UnsupportedFormat for other
// magics (naming the magic) and ParseError for malformed headers or truncated payloads.
Image read_pgm(const std::filesystem::path& path);
// Writes a binary 8-bit PGM after rounding half away from zero and clamping to [0, 255].
void write_pgm(const std::filesystem::path& path, const Image& image);

// The 8-bit export applied by write_pgm, without writing a file.
Image quantize(const Image& image);

// x + N(0, sigma^2) per pixel, unclipped.
Image add_awgn(const Image& image, double sigma, std::uint64_t seed);

// Masks a random subset of round(fraction * pixels) pixels as missing.
PixelMask random_missing_mask(std::size_t height, std::size_t width, double fraction, std::uint64_t seed);
// Pixels with (r + c) odd are missing.
PixelMask checkerboard_mask(std::size_t height, std::size_t width);

// Deterministic piecewise-constant test picture (house, windows, sun, fence) with
// smooth gradients, used where no natural image is available.
Image synthetic_scene(std::size_t height, std::size_t width);

}  // namespace tvae
