// SPDX-License-Identifier: Apache-2.0

#include "tvae/generative_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

#include "tvae/errors.hpp"
#include "tvae/parallel.hpp"

namespace tvae {

void ModelParams::clamp() {
  for (double& p : pi) p = std::clamp(p, kPiClampEps, 1.0 - kPiClampEps);
  sigma2 = std::max(sigma2, kSigma2Floor);
}

void ModelParams::validate() const {
  if (pi.size() != net.input_dim()) {
    throw InvalidInput("prior has " + std::to_string(pi.size()) + " entries but the decoder takes " +
                       std::to_string(net.input_dim()) + " latents");
  }
  for (double p : pi) {
    if (!(p > 0.0 && p < 1.0)) throw InvalidInput("prior probabilities must lie strictly inside (0, 1)");
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidInput("sigma2 must be positive and finite");
}

std::vector<double> pi_tilde(std::span<const double> pi) {
  std::vector<double> out(pi.size());
  for (std::size_t h = 0; h < pi.size(); ++h) out[h] = std::log((1.0 - pi[h]) / pi[h]);
  return out;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double top = sorted.front();
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : sorted) sum += std::exp(x - top);
  return top + std::log(sum);
}

JointEvaluator::JointEvaluator(const ModelParams& theta) : theta_(&theta), pi_tilde_(pi_tilde(theta.pi)) {
  theta.validate();
  for (double p : theta.pi) log_one_minus_pi_sum_ += std::log1p(-p);
  log_two_pi_sigma2_ = std::log(2.0 * std::numbers::pi * theta.sigma2);
}

std::span<const double> JointEvaluator::mean(const BinaryLatentState& z) { return forward(theta_->net, z, cache_); }

double JointEvaluator::squared_error(ObservationView x, const BinaryLatentState& z) {
  if (x.size() != theta_->dim()) throw InvalidInput("observation length does not match decoder output");
  auto mu = mean(z);
  double err = 0.0;
  if (x.observed.empty()) {
    for (std::size_t d = 0; d < mu.size(); ++d) {
      const double r = x.values[d] - mu[d];
      err += r * r;
    }
  } else {
    for (std::size_t d = 0; d < mu.size(); ++d) {
      if (!x.observed[d]) continue;
      const double r = x.values[d] - mu[d];
      err += r * r;
    }
  }
  return err;
}

double JointEvaluator::prior_energy(const BinaryLatentState& z) const {
  double e = 0.0;
  for (std::size_t h = 0; h < z.size(); ++h) {
    if (z[h]) e += pi_tilde_[h];
  }
  return e;
}

double JointEvaluator::pseudo_log_joint(ObservationView x, const BinaryLatentState& z) {
  if (z.size() != pi_tilde_.size()) throw InvalidInput("latent state length does not match the prior");
  return -squared_error(x, z) - 2.0 * theta_->sigma2 * prior_energy(z);
}

double JointEvaluator::log_joint_from_pseudo(double pseudo, std::size_t observed) const {
  // log p(x,z) = pseudo / (2 sigma^2) + sum_h log(1 - pi_h) - D_obs/2 log(2 pi sigma^2)
  return pseudo / (2.0 * theta_->sigma2) + log_one_minus_pi_sum_ -
         0.5 * static_cast<double>(observed) * log_two_pi_sigma2_;
}

double JointEvaluator::log_joint(ObservationView x, const BinaryLatentState& z) {
  return log_joint_from_pseudo(pseudo_log_joint(x, z), x.observed_count());
}

double log_pseudo_joint(const ModelParams& theta, ObservationView x, const BinaryLatentState& z) {
  JointEvaluator eval(theta);
  return eval.pseudo_log_joint(x, z);
}

double log_joint(const ModelParams& theta, ObservationView x, const BinaryLatentState& z) {
  JointEvaluator eval(theta);
  return eval.log_joint(x, z);
}

std::vector<double> q_weights_from_log_joints(std::span<const double> log_joints) {
  const double norm = log_sum_exp(log_joints);
  std::vector<double> q(log_joints.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::exp(log_joints[i] - norm);
  return q;
}

namespace {

std::vector<double> log_joints(JointEvaluator& eval, ObservationView x, std::span<const BinaryLatentState> states) {
  const std::size_t observed = x.observed_count();
  std::vector<double> lj(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    lj[i] = eval.log_joint_from_pseudo(eval.pseudo_log_joint(x, states[i]), observed);
  }
  return lj;
}

void check_sets(const ModelParams& theta, const Dataset& data, const VariationalSets& sets) {
  if (sets.size() != data.size()) throw InvalidInput("need exactly one variational set per datapoint");
  if (data.dim() != theta.dim()) throw InvalidInput("data dimension does not match decoder output");
}

}  // namespace

std::vector<double> q_weights(const ModelParams& theta, ObservationView x, std::span<const BinaryLatentState> states) {
  if (states.empty()) throw InvalidInput("q_weights: empty state set");
  JointEvaluator eval(theta);
  return q_weights_from_log_joints(log_joints(eval, x, states));
}

double truncated_log_marginal(const ModelParams& theta, ObservationView x, std::span<const BinaryLatentState> states) {
  JointEvaluator eval(theta);
  return log_sum_exp(log_joints(eval, x, states));
}

double elbo(const ModelParams& theta, const Dataset& data, const VariationalSets& sets, unsigned workers) {
  check_sets(theta, data, sets);
  std::vector<JointEvaluator> evals;
  for (unsigned w = 0; w < std::max(1U, workers); ++w) evals.emplace_back(theta);
  std::vector<double> per_point(data.size());
  parallel_for(data.size(), workers, [&](std::size_t n, unsigned w) {
    per_point[n] = log_sum_exp(log_joints(evals[w], data[n], sets[n]));
  });
  double total = 0.0;
  for (double v : per_point) total += v;
  return total;
}

PiSigmaUpdate update_pi_sigma(const ModelParams& theta, const Dataset& data, const VariationalSets& sets,
                              unsigned workers) {
  check_sets(theta, data, sets);
  const std::size_t H = theta.num_latents();
  std::vector<JointEvaluator> evals;
  for (unsigned w = 0; w < std::max(1U, workers); ++w) evals.emplace_back(theta);
  std::vector<double> sq_err(data.size());
  std::vector<std::vector<double>> pi_acc(data.size());
  parallel_for(data.size(), workers, [&](std::size_t n, unsigned w) {
    auto& eval = evals[w];
    const auto x = data[n];
    const auto& states = sets[n];
    const std::size_t observed = x.observed_count();
    std::vector<double> lj(states.size());
    std::vector<double> err(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
      err[i] = eval.squared_error(x, states[i]);
      const double pseudo = -err[i] - 2.0 * theta.sigma2 * eval.prior_energy(states[i]);
      lj[i] = eval.log_joint_from_pseudo(pseudo, observed);
    }
    const auto q = q_weights_from_log_joints(lj);
    double e = 0.0;
    std::vector<double> acc(H, 0.0);
    for (std::size_t i = 0; i < states.size(); ++i) {
      e += q[i] * err[i];
      for (std::size_t h = 0; h < H; ++h) {
        if (states[i][h]) acc[h] += q[i];
      }
    }
    sq_err[n] = e;
    pi_acc[n] = std::move(acc);
  });
  PiSigmaUpdate out;
  out.pi.assign(H, 0.0);
  double err_total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    err_total += sq_err[n];
    for (std::size_t h = 0; h < H; ++h) out.pi[h] += pi_acc[n][h];
  }
  const double N = static_cast<double>(data.size());
  for (double& p : out.pi) p = std::clamp(p / N, kPiClampEps, 1.0 - kPiClampEps);
  out.sigma2 = std::max(err_total / static_cast<double>(data.total_observed()), kSigma2Floor);
  return out;
}

}  // namespace tvae
