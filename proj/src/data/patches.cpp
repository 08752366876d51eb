// SPDX-License-Identifier: Apache-2.0

#include "tvae/patches.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tvae/errors.hpp"

namespace tvae {

namespace {

std::vector<std::size_t> axis_origins(std::size_t extent, std::size_t patch, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t o = 0; o + patch <= extent; o += stride) out.push_back(o);
  if (out.back() + patch < extent) out.push_back(extent - patch);
  return out;
}

}  // namespace

PatchGrid PatchGrid::make(std::size_t image_height, std::size_t image_width, std::size_t patch_height,
                          std::size_t patch_width, std::size_t stride) {
  if (patch_height == 0 || patch_width == 0) throw InvalidInput("patch size must be >= 1");
  if (stride == 0) throw InvalidInput("patch stride must be >= 1");
  if (patch_height > image_height || patch_width > image_width)
    throw InvalidInput("patch " + std::to_string(patch_height) + "x" + std::to_string(patch_width) +
                       " does not fit into image " + std::to_string(image_height) + "x" +
                       std::to_string(image_width));
  PatchGrid g{image_height, image_width, patch_height, patch_width, stride, {}};
  const auto rows = axis_origins(image_height, patch_height, stride);
  const auto cols = axis_origins(image_width, patch_width, stride);
  g.origins.reserve(rows.size() * cols.size());
  for (auto r : rows)
    for (auto c : cols) g.origins.push_back({r, c});
  return g;
}

PatchSet extract_patches(const Image& image, std::size_t patch_size, std::size_t stride, const PixelMask* mask) {
  return extract_patches(image, patch_size, patch_size, stride, mask);
}

PatchSet extract_patches(const Image& image, std::size_t patch_height, std::size_t patch_width, std::size_t stride,
                         const PixelMask* mask) {
  if (image.pixels.size() != image.height * image.width) throw InvalidInput("image pixel buffer has wrong size");
  if (mask && (mask->height != image.height || mask->width != image.width ||
               mask->observed.size() != image.pixels.size()))
    throw InvalidInput("pixel mask shape does not match the image");
  PatchGrid grid = PatchGrid::make(image.height, image.width, patch_height, patch_width, stride);
  const std::size_t P = grid.num_patches();
  const std::size_t D = grid.patch_dim();
  std::vector<double> values(P * D);
  std::vector<std::uint8_t> observed;
  if (mask) observed.resize(P * D);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t d = 0; d < D; ++d) {
      const std::size_t px = grid.pixel_index(p, d);
      values[p * D + d] = image.pixels[px];
      if (mask) observed[p * D + d] = mask->observed[px] ? 1 : 0;
    }
  }
  return {Dataset(P, D, std::move(values), std::move(observed)), std::move(grid)};
}

Image merge_patches(std::span<const double> estimates, const PatchGrid& grid, const MergeOptions& options) {
  const std::size_t P = grid.num_patches();
  const std::size_t D = grid.patch_dim();
  if (estimates.size() != P * D)
    throw InvalidInput("merge_patches: expected " + std::to_string(P * D) + " values, got " +
                       std::to_string(estimates.size()));
  if (options.patch_weights && options.patch_weights->size() != P)
    throw InvalidInput("merge_patches: one weight per patch required");
  if (options.include && options.include->size() != P)
    throw InvalidInput("merge_patches: one include flag per patch required");

  // Running weighted mean: identical estimates reproduce their value bit-exactly.
  std::vector<double> mean(grid.image_height * grid.image_width, 0.0);
  std::vector<double> wsum(mean.size(), 0.0);
  for (std::size_t p = 0; p < P; ++p) {
    if (options.include && !(*options.include)[p]) continue;
    const double w = options.patch_weights ? (*options.patch_weights)[p] : 1.0;
    if (!(w >= 0.0)) throw InvalidInput("merge_patches: patch weights must be >= 0");
    if (w == 0.0) continue;
    for (std::size_t d = 0; d < D; ++d) {
      const std::size_t px = grid.pixel_index(p, d);
      wsum[px] += w;
      mean[px] += (w / wsum[px]) * (estimates[p * D + d] - mean[px]);
    }
  }
  Image out(grid.image_height, grid.image_width);
  for (std::size_t i = 0; i < mean.size(); ++i)
    out.pixels[i] = wsum[i] > 0.0 ? mean[i] : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<double> subtract_patch_means(Dataset& patches) {
  std::vector<double> means(patches.size(), 0.0);
  for (std::size_t n = 0; n < patches.size(); ++n) {
    const auto view = patches[n];
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t d = 0; d < view.size(); ++d) {
      if (!view.is_observed(d)) continue;
      s += view.values[d];
      ++k;
    }
    if (k == 0) continue;
    means[n] = s / static_cast<double>(k);
    for (double& v : patches.values(n)) v -= means[n];
  }
  return means;
}

}  // namespace tvae
