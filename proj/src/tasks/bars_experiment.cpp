// SPDX-License-Identifier: Apache-2.0

#include "tvae/bars_experiment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "tvae/errors.hpp"

namespace tvae {

BarsExperimentConfig default_bars_experiment() {
  BarsExperimentConfig c;
  c.model.num_latents = 8;
  c.model.hidden_layers = {8};
  c.model.pi_init = 0.0;
  c.model.sigma2_init = 1.0;
  c.train.epochs = 300;
  c.train.batch_size = 32;
  c.train.schedule = LrSchedule::cyclic(1e-3, 2e-2, 20);
  c.train.ea.set_size = 64;
  c.train.ea.n_parents = 5;
  c.train.ea.n_children_per_parent = 4;
  c.train.ea.n_generations = 1;
  c.train.ea.n_bitflips = 1;
  return c;
}

BarsExperimentConfig default_correlated_bars_experiment() {
  BarsExperimentConfig c = default_bars_experiment();
  c.correlated = true;
  return c;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

// Maximum-weight perfect matching by dynamic programming over subsets of columns.
std::vector<std::size_t> best_assignment(const std::vector<std::vector<double>>& score) {
  const std::size_t n = score.size();
  if (n > 20) throw InvalidInput("bar assignment limited to at most 20 latents");
  const std::size_t full = std::size_t{1} << n;
  std::vector<double> best(full, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> choice(full, 0);
  best[0] = 0.0;
  for (std::size_t used = 0; used < full; ++used) {
    if (best[used] == -std::numeric_limits<double>::infinity()) continue;
    const auto row = static_cast<std::size_t>(std::popcount(used));
    if (row == n) continue;
    for (std::size_t col = 0; col < n; ++col) {
      if (used & (std::size_t{1} << col)) continue;
      const std::size_t next = used | (std::size_t{1} << col);
      const double v = best[used] + score[row][col];
      if (v > best[next]) {
        best[next] = v;
        choice[next] = col;
      }
    }
  }
  std::vector<std::size_t> assign(n);
  std::size_t used = full - 1;
  for (std::size_t row = n; row-- > 0;) {
    assign[row] = choice[used];
    used &= ~(std::size_t{1} << choice[used]);
  }
  return assign;
}

}  // namespace

RecoveryReport bar_recovery(const ModelParams& theta, const GroundTruthSpec& truth, double threshold) {
  const std::size_t H = theta.num_latents();
  if (H != truth.num_latents()) throw InvalidInput("bar_recovery: model and ground truth differ in H");
  if (theta.dim() != truth.dim()) throw InvalidInput("bar_recovery: model and ground truth differ in D");
  JointEvaluator eval(theta);
  std::vector<std::vector<double>> score(H, std::vector<double>(H));
  for (std::size_t h = 0; h < H; ++h) {
    BinaryLatentState e(H);
    e.set(h, true);
    const auto mu = eval.mean(e);
    const std::vector<double> out(mu.begin(), mu.end());
    for (std::size_t b = 0; b < H; ++b) score[h][b] = cosine(out, truth.bars[b]);
  }
  RecoveryReport r;
  r.assignment = best_assignment(score);
  r.cosines.resize(H);
  for (std::size_t h = 0; h < H; ++h) r.cosines[h] = score[h][r.assignment[h]];
  r.min_cosine = *std::min_element(r.cosines.begin(), r.cosines.end());
  r.recovered = r.min_cosine >= threshold;
  return r;
}

std::vector<std::pair<std::size_t, std::size_t>> discouraged_pairs(const GroundTruthSpec& truth) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (!truth.inhibition) return out;
  const auto& w0 = *truth.inhibition;
  for (std::size_t j = 0; j < w0.size(); ++j)
    for (std::size_t i = 0; i < w0.size(); ++i)
      if (i != j && w0[j][i] < 0.0) out.emplace_back(std::min(i, j), std::max(i, j));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PairLikelihood> pair_likelihoods(const ModelParams& theta, const GroundTruthSpec& truth) {
  const std::size_t H = truth.num_latents();
  const auto bad = discouraged_pairs(truth);
  std::vector<PairLikelihood> out;
  for (std::size_t a = 0; a < H; ++a) {
    for (std::size_t b = a + 1; b < H; ++b) {
      std::vector<double> x(truth.dim());
      for (std::size_t d = 0; d < x.size(); ++d) x[d] = truth.bars[a][d] + truth.bars[b][d];
      const Observation obs(std::move(x));
      const bool disc = std::find(bad.begin(), bad.end(), std::make_pair(a, b)) != bad.end();
      out.push_back({a, b, exact_log_marginal(theta, obs), disc});
    }
  }
  return out;
}

bool discouraged_pairs_ranked_lowest(const std::vector<PairLikelihood>& pairs) {
  double worst_allowed = std::numeric_limits<double>::infinity();
  double best_discouraged = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& p : pairs) {
    if (p.discouraged) {
      best_discouraged = std::max(best_discouraged, p.log_px);
      any = true;
    } else {
      worst_allowed = std::min(worst_allowed, p.log_px);
    }
  }
  return any && best_discouraged < worst_allowed;
}

bool BarsExperimentResult::passed(double max_relative_gap) const {
  if (runs.empty()) return false;
  const auto& r = best_run();
  if (truth.inhibition) return r.pairs_ok;
  return r.recovery.recovered && r.relative_gap <= max_relative_gap;
}

BarsExperimentResult run_bars_experiment(const BarsExperimentConfig& config, std::uint64_t seed,
                                         const std::function<void(const BarsRun&, int)>& on_run) {
  if (config.runs < 1) throw InvalidInput("bars experiment needs at least one run");
  BarsExperimentResult result;
  Dataset data;
  if (config.correlated) {
    result.truth = default_correlated_spec(config.side);
    result.truth.sigma2 = config.gen_sigma2;
    result.truth.pi.assign(result.truth.num_latents(), config.gen_pi);
    data = gen_correlated_bars(result.truth, config.num_points, seed);
  } else {
    auto gen = gen_bars(config.side, config.num_points, config.gen_sigma2, config.gen_pi, seed);
    data = std::move(gen.data);
    result.truth = std::move(gen.truth);
  }
  result.ground_truth_loglik = ground_truth_log_likelihood(result.truth, data);

  for (int i = 0; i < config.runs; ++i) {
    TrainConfig train = config.train;
    train.seed = seed + 1 + static_cast<std::uint64_t>(i);
    FitResult fitted = fit(data, config.model, train);
    BarsRun run;
    run.seed = train.seed;
    run.final_elbo = fitted.metrics.empty() ? elbo(fitted.state.theta, data, fitted.state.sets, train.workers)
                                            : fitted.metrics.back().elbo;
    run.ground_truth_loglik = result.ground_truth_loglik;
    run.relative_gap = std::abs(run.final_elbo - result.ground_truth_loglik) / std::abs(result.ground_truth_loglik);
    run.recovery = bar_recovery(fitted.state.theta, result.truth);
    if (config.correlated) {
      run.pairs = pair_likelihoods(fitted.state.theta, result.truth);
      run.pairs_ok = discouraged_pairs_ranked_lowest(run.pairs);
    }
    run.theta = std::move(fitted.state.theta);
    if (on_run) on_run(run, i);
    result.runs.push_back(std::move(run));
  }
  for (std::size_t i = 1; i < result.runs.size(); ++i)
    if (result.runs[i].final_elbo > result.runs[result.best].final_elbo) result.best = i;
  return result;
}

}  // namespace tvae
