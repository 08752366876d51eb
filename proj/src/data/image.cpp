// SPDX-License-Identifier: Apache-2.0

#include "tvae/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <string>

#include "tvae/errors.hpp"

namespace tvae {

std::size_t PixelMask::missing_count() const {
  return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), std::uint8_t{0}));
}

namespace {

class HeaderReader {
 public:
  HeaderReader(const std::vector<char>& bytes, const std::string& name) : bytes_(bytes), name_(name) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (v > 1'000'000'000UL) throw ParseError(name_ + ": PGM " + what + " out of range");
      ++pos_;
    }
    if (pos_ == start) throw ParseError(name_ + ": malformed PGM header, expected " + what);
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      throw ParseError(name_ + ": malformed PGM header, missing whitespace before raster");
    ++pos_;
  }

 private:
  const std::vector<char>& bytes_;
  const std::string& name_;
  std::size_t pos_ = 2;
};

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open image '" + path.string() + "'");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 2) throw ParseError(name + ": file too short for a PGM header");
  const std::string magic(bytes.begin(), bytes.begin() + 2);
  if (magic != "P5") {
    std::string shown;
    for (char c : magic) shown += std::isprint(static_cast<unsigned char>(c)) ? c : '?';
    throw UnsupportedFormat(name + ": unsupported image format with magic '" + shown + "', only binary PGM (P5) is read");
  }
  HeaderReader hdr(bytes, name);
  const auto width = hdr.number("width");
  const auto height = hdr.number("height");
  const auto maxval = hdr.number("maxval");
  hdr.single_whitespace();
  if (width == 0 || height == 0) throw ParseError(name + ": PGM with zero width or height");
  if (maxval == 0 || maxval > 255) throw UnsupportedFormat(name + ": only 8-bit PGM (maxval 1..255) is supported");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() - hdr.pos() < n)
    throw ParseError(name + ": truncated PGM payload, expected " + std::to_string(n) + " bytes, found " +
                     std::to_string(bytes.size() - hdr.pos()));
  Image img(height, width);
  for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<unsigned char>(bytes[hdr.pos() + i]);
  return img;
}

Image quantize(const Image& image) {
  Image out = image;
  for (double& p : out.pixels) p = std::isnan(p) ? 0.0 : std::clamp(std::round(p), 0.0, 255.0);  // half away from zero
  return out;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  if (image.width == 0 || image.height == 0) throw InvalidInput("cannot write an empty image");
  const Image q = quantize(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<char> raster(q.size());
  std::transform(q.pixels.begin(), q.pixels.end(), raster.begin(),
                 [](double v) { return static_cast<char>(static_cast<unsigned char>(v)); });
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

Image add_awgn(const Image& image, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidInput("noise standard deviation must be >= 0");
  Image out = image;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& p : out.pixels) p += noise(rng);
  return out;
}

PixelMask random_missing_mask(std::size_t height, std::size_t width, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidInput("missing fraction must lie in [0, 1]");
  PixelMask m{height, width, std::vector<std::uint8_t>(height * width, 1)};
  std::vector<std::size_t> idx(height * width);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
  for (std::size_t i = 0; i < k; ++i) m.observed[idx[i]] = 0;
  return m;
}

PixelMask checkerboard_mask(std::size_t height, std::size_t width) {
  PixelMask m{height, width, std::vector<std::uint8_t>(height * width, 1)};
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c)
      if ((r + c) % 2 == 1) m.observed[r * width + c] = 0;
  return m;
}

Image synthetic_scene(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw InvalidInput("synthetic_scene: empty size");
  Image img(height, width);
  const double sh = static_cast<double>(height), sw = static_cast<double>(width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double y = (static_cast<double>(r) + 0.5) / sh, x = (static_cast<double>(c) + 0.5) / sw;
      // sky gradient over a darker ground plane
      double v = y < 0.55 ? 200.0 - 60.0 * y : 90.0 + 30.0 * x;
      // house body and roof
      if (x > 0.15 && x < 0.6 && y > 0.35 && y < 0.8) v = 170.0;
      if (y > 0.15 && y <= 0.35 && std::abs(x - 0.375) < (y - 0.15) * 1.2) v = 60.0;
      // windows and door
      if (y > 0.45 && y < 0.58 && ((x > 0.2 && x < 0.3) || (x > 0.45 && x < 0.55))) v = 35.0;
      if (x > 0.33 && x < 0.42 && y > 0.58 && y < 0.8) v = 110.0;
      // sun
      if ((x - 0.82) * (x - 0.82) + (y - 0.2) * (y - 0.2) < 0.01) v = 245.0;
      // fence stripes on the ground
      if (y > 0.82 && y < 0.95 && static_cast<int>(x * 16.0) % 2 == 0) v = 140.0;
      img.at(r, c) = v;
    }
  }
  return img;
}

}  // namespace tvae
