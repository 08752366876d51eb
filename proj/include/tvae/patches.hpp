// SPDX-License-Identifier: Apache-2.0
//
// Patch extraction and overlap-averaged merging.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tvae/dataset.hpp"
#include "tvae/image.hpp"

namespace tvae {

struct PatchOrigin {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const PatchOrigin&, const PatchOrigin&) = default;
};

// Origins advance by `stride` in row-major order. When the last regular origin does not
// reach the image border, one extra origin flush with the border is appended per axis so
// every pixel is covered.
struct PatchGrid {
  std::size_t image_height = 0;
  std::size_t image_width = 0;
  std::size_t patch_height = 0;
  std::size_t patch_width = 0;
  std::size_t stride = 1;
  std::vector<PatchOrigin> origins;

  static PatchGrid make(std::size_t image_height, std::size_t image_width, std::size_t patch_height,
                        std::size_t patch_width, std::size_t stride);

  std::size_t num_patches() const { return origins.size(); }
  std::size_t patch_dim() const { return patch_height * patch_width; }
  // Pixel index in the image of entry d of patch p.
  std::size_t pixel_index(std::size_t p, std::size_t d) const {
    const auto& o = origins[p];
    return (o.row + d / patch_width) * image_width + o.col + d % patch_width;
  }
};

struct PatchSet {
  Dataset data;  // one row per patch, mask propagated from the pixel mask
  PatchGrid grid;
};

// Throws InvalidInput when the patch does not fit, stride is 0 or the mask shape differs.
PatchSet extract_patches(const Image& image, std::size_t patch_size, std::size_t stride,
                         const PixelMask* mask = nullptr);
PatchSet extract_patches(const Image& image, std::size_t patch_height, std::size_t patch_width, std::size_t stride,
                         const PixelMask* mask);

struct MergeOptions {
  std::optional<std::vector<double>> patch_weights;  // default: uniform
  std::optional<std::vector<bool>> include;           // default: every patch
};

// Each pixel becomes the (weighted) average of the estimates of all included patches
// covering it. Pixels covered by no included patch are NaN.
// `estimates` holds num_patches rows of patch_dim values.
Image merge_patches(std::span<const double> estimates, const PatchGrid& grid, const MergeOptions& options = {});

// Subtracts from every patch the mean of its observed entries, returning the means.
// Patches without observed entries get mean 0.
std::vector<double> subtract_patch_means(Dataset& patches);

}  // namespace tvae
