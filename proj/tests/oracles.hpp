// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations for tests: plain scalar loops written independently of the
// library code paths, used as oracles.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "tvae/binary_state.hpp"
#include "tvae/dataset.hpp"
#include "tvae/decoder_net.hpp"
#include "tvae/generative_model.hpp"
#include "tvae/variational_sets.hpp"

namespace oracle {

using tvae::BinaryLatentState;
using tvae::DecoderNet;
using tvae::ModelParams;
using tvae::ObservationView;

inline double act(tvae::Activation a, double v) { return a == tvae::Activation::ReLU ? std::max(0.0, v) : v; }

inline std::vector<double> forward(const DecoderNet& net, const std::vector<double>& input) {
  std::vector<double> a = input;
  const auto& dims = net.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    std::vector<double> next(dims[l + 1]);
    const auto w = net.weight(l);
    const auto b = net.bias(l);
    for (std::size_t i = 0; i < dims[l + 1]; ++i) {
      double s = b[i];
      for (std::size_t j = 0; j < dims[l]; ++j) s += w(i, j) * a[j];
      next[i] = act(net.activation(l), s);
    }
    a = std::move(next);
  }
  return a;
}

inline std::vector<double> forward(const DecoderNet& net, const BinaryLatentState& z) {
  std::vector<double> in(z.size());
  for (std::size_t h = 0; h < z.size(); ++h) in[h] = z[h] ? 1.0 : 0.0;
  return oracle::forward(net, in);
}

inline double log_joint(const ModelParams& theta, ObservationView x, const BinaryLatentState& z) {
  const auto mu = oracle::forward(theta.net, z);
  double lp = 0.0;
  for (std::size_t h = 0; h < z.size(); ++h) lp += z[h] ? std::log(theta.pi[h]) : std::log(1.0 - theta.pi[h]);
  double ll = 0.0;
  for (std::size_t d = 0; d < mu.size(); ++d) {
    if (!x.is_observed(d)) continue;
    const double r = x.values[d] - mu[d];
    ll += -0.5 * std::log(2.0 * std::numbers::pi * theta.sigma2) - r * r / (2.0 * theta.sigma2);
  }
  return lp + ll;
}

inline double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  long double s = 0.0L;
  for (double t : v) s += std::exp(static_cast<long double>(t - m));
  return m + static_cast<double>(std::log(s));
}

inline std::vector<double> posterior(const ModelParams& theta, ObservationView x,
                                     const std::vector<BinaryLatentState>& states) {
  std::vector<double> lj;
  for (const auto& z : states) lj.push_back(oracle::log_joint(theta, x, z));
  const double lse = oracle::log_sum_exp(lj);
  std::vector<double> q;
  for (double v : lj) q.push_back(std::exp(v - lse));
  return q;
}

// sum_z q(z) log p(x, z) - sum_z q(z) log q(z), the expectation-plus-entropy form of the bound.
inline double elbo_explicit(const ModelParams& theta, ObservationView x, const std::vector<BinaryLatentState>& states) {
  const auto q = oracle::posterior(theta, x, states);
  double e = 0.0, h = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    e += q[k] * oracle::log_joint(theta, x, states[k]);
    if (q[k] > 0.0) h -= q[k] * std::log(q[k]);
  }
  return e + h;
}

inline std::vector<BinaryLatentState> all_states(std::size_t H) {
  std::vector<BinaryLatentState> out;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << H); ++s) out.push_back(BinaryLatentState::from_index(s, H));
  return out;
}

inline double exact_log_marginal(const ModelParams& theta, ObservationView x) {
  std::vector<double> lj;
  for (const auto& z : all_states(theta.num_latents())) lj.push_back(oracle::log_joint(theta, x, z));
  return oracle::log_sum_exp(lj);
}

// sum_k w_k ||x - mu(z_k)||^2 over observed entries.
inline double weighted_mse(const DecoderNet& net, const std::vector<double>& x,
                           const std::vector<BinaryLatentState>& states, const std::vector<double>& w,
                           const std::vector<std::uint8_t>& mask) {
  double s = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto mu = oracle::forward(net, states[k]);
    for (std::size_t d = 0; d < mu.size(); ++d) {
      if (!mask.empty() && !mask[d]) continue;
      s += w[k] * (x[d] - mu[d]) * (x[d] - mu[d]);
    }
  }
  return s;
}

// Net with every weight and bias drawn uniformly from [-scale, scale].
inline DecoderNet random_net(const std::vector<std::size_t>& dims, std::mt19937_64& rng, double scale = 1.0,
                             tvae::Activation hidden = tvae::Activation::ReLU) {
  DecoderNet net(dims, hidden);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& p : net.params()) p = u(rng);
  return net;
}

inline ModelParams random_model(const std::vector<std::size_t>& dims, std::mt19937_64& rng, double sigma2 = 0.5) {
  ModelParams theta;
  theta.net = random_net(dims, rng);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  theta.pi.resize(dims.front());
  for (double& p : theta.pi) p = u(rng);
  theta.sigma2 = sigma2;
  return theta;
}

// S distinct random states of length H.
inline std::vector<BinaryLatentState> random_states(std::size_t H, std::size_t S, std::mt19937_64& rng) {
  std::vector<BinaryLatentState> out;
  std::uniform_int_distribution<std::uint64_t> u(0, (std::uint64_t{1} << H) - 1);
  while (out.size() < S) {
    auto z = BinaryLatentState::from_index(u(rng), H);
    if (std::find(out.begin(), out.end(), z) == out.end()) out.push_back(std::move(z));
  }
  return out;
}

inline tvae::Dataset random_data(std::size_t N, std::size_t D, std::mt19937_64& rng, double scale = 1.0) {
  tvae::Dataset data(N, D);
  std::normal_distribution<double> g(0.0, scale);
  for (std::size_t n = 0; n < N; ++n)
    for (double& v : data.values(n)) v = g(rng);
  return data;
}

inline double rel_err(double a, double b) {
  const double m = std::max(std::abs(a), std::abs(b));
  return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

}  // namespace oracle
