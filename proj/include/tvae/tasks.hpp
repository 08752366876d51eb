// SPDX-License-Identifier: Apache-2.0
//
// Zero-shot denoising and inpainting of a single grayscale image, plus PSNR.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tvae/image.hpp"
#include "tvae/patches.hpp"
#include "tvae/trainer.hpp"

namespace tvae {

// sum_{z in Phi} q(z) mu(z; W) for all D entries, including unobserved ones. The states are
// visited in canonical bit order, so the result does not depend on the order of `phi`.
std::vector<double> posterior_pixel_estimate(const ModelParams& theta, ObservationView x,
                                             std::span<const BinaryLatentState> phi);
std::vector<double> posterior_pixel_estimate(JointEvaluator& eval, ObservationView x,
                                             std::span<const BinaryLatentState> phi);

// 10 log10(peak^2 / MSE) over all pixels; +infinity for identical images.
double psnr(const Image& a, const Image& b, double peak = 255.0);

struct PatchTaskConfig {
  ModelSpec model;
  TrainConfig train;
  std::size_t patch_size = 8;
  std::size_t stride = 1;
  bool mean_subtract = false;
  int psnr_every = 0;  // epochs between PSNR evaluations against the clean image, 0 = off
};

struct DenoiseResult {
  Image image;  // float composite before 8-bit export
  std::optional<double> psnr;
  std::optional<double> psnr_quantized;
  std::vector<EpochMetrics> metrics;           // per-epoch ELBO trace
  std::vector<std::pair<int, double>> psnr_trace;  // (epoch, PSNR) when psnr_every > 0
  double seconds = 0.0;
  std::size_t num_patches = 0;
  std::size_t excluded_patches = 0;  // patches without any observed pixel
  ModelParams theta;
};

// Patches -> fit on the noisy patches alone -> posterior estimates -> overlap average.
DenoiseResult denoise(const Image& noisy, const PatchTaskConfig& config, const Image* clean = nullptr,
                      const FitOptions& fit_options = {});

// As denoise, with missing pixels treated as unobserved. Observed pixels keep their input
// values in the returned image. Patches without observed pixels are skipped during training
// and estimation; pixels covered only by such patches get the mean of all observed pixels.
DenoiseResult inpaint(const Image& image, const PixelMask& mask, const PatchTaskConfig& config,
                      const Image* clean = nullptr, const FitOptions& fit_options = {});

}  // namespace tvae
