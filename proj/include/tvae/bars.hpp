// SPDX-License-Identifier: Apache-2.0
//
// Bars test data. For a side x side grid there are H = 2 * side bars: latents
// 0..side-1 are horizontal bars (rows), latents side..2*side-1 vertical bars (columns).

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "tvae/dataset.hpp"
#include "tvae/generative_model.hpp"

namespace tvae {

struct GroundTruthSpec {
  std::size_t side = 4;
  std::vector<std::vector<double>> bars;                  // H images of side*side pixels
  std::optional<std::vector<std::vector<double>>> inhibition;  // W0, H x H
  std::vector<double> pi;
  double sigma2 = 0.01;

  std::size_t num_latents() const { return bars.size(); }
  std::size_t dim() const { return side * side; }
  // Middle-layer intensities h = clamp(W0 z, 0, 1), or z without inhibition.
  std::vector<double> middle(const BinaryLatentState& z) const;
  // W1 h
  std::vector<double> mean(const BinaryLatentState& z) const;
};

struct BarsData {
  Dataset data;
  GroundTruthSpec truth;
};

std::vector<std::vector<double>> bar_images(std::size_t side);

// x = W1 z + N(0, sigma2 I) with z ~ Bern(pi).
BarsData gen_bars(std::size_t side, std::size_t num_points, double sigma2, double pi, std::uint64_t seed);

// Identity W0 with -1 entries so that latent 0 suppresses bar 1 and latent 6 suppresses bar 7
// (pairs 1->2 and 7->8 in one-based numbering). sigma2 = 0.01, pi_h = 2/8.
GroundTruthSpec default_correlated_spec(std::size_t side = 4);

// h = clamp(W0 z, 0, 1), x = W1 h + noise.
Dataset gen_correlated_bars(const GroundTruthSpec& spec, std::size_t num_points, std::uint64_t seed);

// log p(x) for one observation under the ground-truth generative process, by enumerating all 2^H states.
double ground_truth_log_marginal(const GroundTruthSpec& spec, ObservationView x);
// sum_n log p(x^(n)) under the ground-truth process.
double ground_truth_log_likelihood(const GroundTruthSpec& spec, const Dataset& data);

// log p(x) under a trained model, by enumerating all 2^H states. Throws InvalidInput for H > 24.
double exact_log_marginal(const ModelParams& theta, ObservationView x);
double exact_log_likelihood(const ModelParams& theta, const Dataset& data);

}  // namespace tvae
