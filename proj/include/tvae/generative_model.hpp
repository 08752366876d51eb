// SPDX-License-Identifier: Apache-2.0
//
// Binary-latent generative model
//
//   p(z)   = prod_h pi_h^z_h (1 - pi_h)^(1 - z_h)
//   p(x|z) = N(x; mu(z; W), sigma^2 I)
//
// together with truncated posteriors over a finite state set Phi, the truncated
// free energy F = sum_n log sum_{z in Phi(n)} p(x^(n), z), and the closed-form
// updates of pi and sigma^2. Every sum over pixels runs over observed entries only.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tvae/binary_state.hpp"
#include "tvae/dataset.hpp"
#include "tvae/decoder_net.hpp"
#include "tvae/variational_sets.hpp"

namespace tvae {

inline constexpr double kPiClampEps = 1e-5;
inline constexpr double kSigma2Floor = 1e-8;

struct ModelParams {
  DecoderNet net;
  std::vector<double> pi;
  double sigma2 = 0.01;

  std::size_t num_latents() const { return pi.size(); }
  std::size_t dim() const { return net.output_dim(); }

  // Clamps pi into [eps, 1-eps] and sigma2 to its floor.
  void clamp();
  // Throws InvalidInput on shape mismatch between net and pi or on out-of-range values.
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// log((1 - pi_h) / pi_h)
std::vector<double> pi_tilde(std::span<const double> pi);

// Numerically stable log sum_i exp(v_i). The terms are accumulated in descending
// order so the result does not depend on the order of `v`. Empty input gives -inf.
double log_sum_exp(std::span<const double> v);

// Evaluates joints for one fixed Theta. Holds scratch buffers, so use one instance per thread.
class JointEvaluator {
 public:
  explicit JointEvaluator(const ModelParams& theta);

  const ModelParams& theta() const { return *theta_; }

  // mu(z; W). The span stays valid until the next call on this evaluator.
  std::span<const double> mean(const BinaryLatentState& z);
  // sum over observed d of (x_d - mu_d(z))^2
  double squared_error(ObservationView x, const BinaryLatentState& z);
  // -||x - mu(z)||^2_obs - 2 sigma^2 sum_h pi~_h z_h
  double pseudo_log_joint(ObservationView x, const BinaryLatentState& z);
  // log N(x_obs; mu_obs(z), sigma^2 I) + log Bern(z; pi)
  double log_joint(ObservationView x, const BinaryLatentState& z);
  // sum_h pi~_h z_h
  double prior_energy(const BinaryLatentState& z) const;
  // Converts a pseudo log-joint into the exact log-joint for a datapoint with `observed` entries.
  double log_joint_from_pseudo(double pseudo, std::size_t observed) const;

  // Forward cache of the latest mean()/squared_error()/... call, usable for backpropagation.
  const ForwardCache& cache() const { return cache_; }

 private:
  const ModelParams* theta_;
  std::vector<double> pi_tilde_;
  double log_one_minus_pi_sum_ = 0.0;
  double log_two_pi_sigma2_ = 0.0;
  ForwardCache cache_;
};

double log_pseudo_joint(const ModelParams& theta, ObservationView x, const BinaryLatentState& z);
double log_joint(const ModelParams& theta, ObservationView x, const BinaryLatentState& z);

// Truncated posterior weights q(z) proportional to p(x, z) on `states`.
std::vector<double> q_weights(const ModelParams& theta, ObservationView x, std::span<const BinaryLatentState> states);
std::vector<double> q_weights_from_log_joints(std::span<const double> log_joints);

// log sum_{z in states} p(x, z)
double truncated_log_marginal(const ModelParams& theta, ObservationView x, std::span<const BinaryLatentState> states);

// F(Phi, Theta) = sum_n log sum_{z in Phi(n)} p(x^(n), z). Per-datapoint terms are summed in
// index order, so the value does not depend on `workers`.
double elbo(const ModelParams& theta, const Dataset& data, const VariationalSets& sets, unsigned workers = 1);

struct PiSigmaUpdate {
  std::vector<double> pi;
  double sigma2 = 0.0;
};

// Closed-form updates (clamped):
//   sigma2 = sum_n sum_z q(z) ||x^(n) - mu(z)||^2_obs / sum_n D_n
//   pi     = (1/N) sum_n sum_z q(z) z
PiSigmaUpdate update_pi_sigma(const ModelParams& theta, const Dataset& data, const VariationalSets& sets,
                              unsigned workers = 1);

}  // namespace tvae
