// SPDX-License-Identifier: Apache-2.0

#include "tvae/bars.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "tvae/errors.hpp"

namespace tvae {

std::vector<std::vector<double>> bar_images(std::size_t side) {
  const std::size_t D = side * side;
  std::vector<std::vector<double>> bars(2 * side, std::vector<double>(D, 0.0));
  for (std::size_t k = 0; k < side; ++k) {
    for (std::size_t j = 0; j < side; ++j) {
      bars[k][k * side + j] = 1.0;         // horizontal bar in row k
      bars[side + k][j * side + k] = 1.0;  // vertical bar in column k
    }
  }
  return bars;
}

std::vector<double> GroundTruthSpec::middle(const BinaryLatentState& z) const {
  const std::size_t H = num_latents();
  if (z.size() != H) throw InvalidInput("ground truth: latent state length mismatch");
  std::vector<double> h(H);
  if (inhibition) {
    const auto& w0 = *inhibition;
    for (std::size_t i = 0; i < H; ++i) {
      double a = 0.0;
      for (std::size_t j = 0; j < H; ++j) a += w0[i][j] * (z[j] ? 1.0 : 0.0);
      h[i] = std::clamp(a, 0.0, 1.0);
    }
  } else {
    for (std::size_t i = 0; i < H; ++i) h[i] = z[i] ? 1.0 : 0.0;
  }
  return h;
}

std::vector<double> GroundTruthSpec::mean(const BinaryLatentState& z) const {
  const std::size_t H = num_latents();
  const auto h = middle(z);
  std::vector<double> x(dim(), 0.0);
  for (std::size_t i = 0; i < H; ++i) {
    if (h[i] == 0.0) continue;
    for (std::size_t d = 0; d < x.size(); ++d) x[d] += h[i] * bars[i][d];
  }
  return x;
}

namespace {

Dataset sample(const GroundTruthSpec& spec, std::size_t num_points, std::uint64_t seed) {
  const std::size_t H = spec.num_latents();
  const std::size_t D = spec.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(spec.sigma2));
  Dataset data(num_points, D);
  for (std::size_t n = 0; n < num_points; ++n) {
    BinaryLatentState z(H);
    for (std::size_t h = 0; h < H; ++h) z.set(h, std::bernoulli_distribution(spec.pi[h])(rng));
    const auto mu = spec.mean(z);
    auto x = data.values(n);
    for (std::size_t d = 0; d < D; ++d) x[d] = mu[d] + (spec.sigma2 > 0.0 ? noise(rng) : 0.0);
  }
  return data;
}

}  // namespace

BarsData gen_bars(std::size_t side, std::size_t num_points, double sigma2, double pi, std::uint64_t seed) {
  if (side < 1) throw InvalidInput("bars grid side must be >= 1");
  if (!(sigma2 >= 0.0)) throw InvalidInput("bars noise variance must be >= 0");
  if (!(pi >= 0.0 && pi <= 1.0)) throw InvalidInput("bars activation probability must lie in [0, 1]");
  GroundTruthSpec truth;
  truth.side = side;
  truth.bars = bar_images(side);
  truth.pi.assign(2 * side, pi);
  truth.sigma2 = sigma2;
  Dataset data = sample(truth, num_points, seed);
  return {std::move(data), std::move(truth)};
}

GroundTruthSpec default_correlated_spec(std::size_t side) {
  if (side < 4) throw InvalidInput("correlated bars need a grid side of at least 4");
  GroundTruthSpec spec;
  spec.side = side;
  spec.bars = bar_images(side);
  const std::size_t H = 2 * side;
  std::vector<std::vector<double>> w0(H, std::vector<double>(H, 0.0));
  for (std::size_t i = 0; i < H; ++i) w0[i][i] = 1.0;
  w0[1][0] = -1.0;
  w0[7][6] = -1.0;
  spec.inhibition = std::move(w0);
  spec.pi.assign(H, 2.0 / 8.0);
  spec.sigma2 = 0.01;
  return spec;
}

Dataset gen_correlated_bars(const GroundTruthSpec& spec, std::size_t num_points, std::uint64_t seed) {
  if (!spec.inhibition) throw InvalidInput("gen_correlated_bars needs an inhibition matrix W0");
  return sample(spec, num_points, seed);
}

double ground_truth_log_marginal(const GroundTruthSpec& spec, ObservationView x) {
  const std::size_t H = spec.num_latents();
  if (H > 24) throw InvalidInput("ground-truth enumeration limited to H <= 24");
  if (!(spec.sigma2 > 0.0)) throw InvalidInput("ground-truth likelihood needs sigma2 > 0");
  const std::size_t observed = x.observed_count();
  std::vector<double> terms(std::size_t{1} << H);
  for (std::uint64_t s = 0; s < terms.size(); ++s) {
    const auto z = BinaryLatentState::from_index(s, H);
    double lp = 0.0;
    for (std::size_t h = 0; h < H; ++h) lp += z[h] ? std::log(spec.pi[h]) : std::log1p(-spec.pi[h]);
    const auto mu = spec.mean(z);
    double err = 0.0;
    for (std::size_t d = 0; d < mu.size(); ++d) {
      if (!x.is_observed(d)) continue;
      err += (x.values[d] - mu[d]) * (x.values[d] - mu[d]);
    }
    terms[s] = lp - err / (2.0 * spec.sigma2) -
               0.5 * static_cast<double>(observed) * std::log(2.0 * std::numbers::pi * spec.sigma2);
  }
  return log_sum_exp(terms);
}

double ground_truth_log_likelihood(const GroundTruthSpec& spec, const Dataset& data) {
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) total += ground_truth_log_marginal(spec, data[n]);
  return total;
}

double exact_log_marginal(const ModelParams& theta, ObservationView x) {
  const std::size_t H = theta.num_latents();
  if (H > 24) throw InvalidInput("exact enumeration limited to H <= 24");
  JointEvaluator eval(theta);
  std::vector<double> terms(std::size_t{1} << H);
  for (std::uint64_t s = 0; s < terms.size(); ++s) terms[s] = eval.log_joint(x, BinaryLatentState::from_index(s, H));
  return log_sum_exp(terms);
}

double exact_log_likelihood(const ModelParams& theta, const Dataset& data) {
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) total += exact_log_marginal(theta, data[n]);
  return total;
}

}  // namespace tvae
