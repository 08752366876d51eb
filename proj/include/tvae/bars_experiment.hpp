// SPDX-License-Identifier: Apache-2.0
//
// Bars and correlated-bars experiments: repeated seeded training runs, recovery of the
// generating bars, and likelihood ranking of bar pairs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tvae/bars.hpp"
#include "tvae/trainer.hpp"

namespace tvae {

struct BarsExperimentConfig {
  std::size_t side = 4;
  std::size_t num_points = 500;
  double gen_sigma2 = 0.01;
  double gen_pi = 2.0 / 8.0;
  bool correlated = false;
  int runs = 10;
  ModelSpec model;
  TrainConfig train;
};

BarsExperimentConfig default_bars_experiment();
BarsExperimentConfig default_correlated_bars_experiment();

struct RecoveryReport {
  bool recovered = false;
  double min_cosine = 0.0;
  std::vector<std::size_t> assignment;  // latent h -> ground-truth bar
  std::vector<double> cosines;          // per latent, against its assigned bar
};

// Compares mu(e_h) for each one-hot state with the ground-truth bars under the assignment
// that maximizes the summed cosine similarity.
RecoveryReport bar_recovery(const ModelParams& theta, const GroundTruthSpec& truth, double threshold = 0.95);

struct PairLikelihood {
  std::size_t a = 0;
  std::size_t b = 0;
  double log_px = 0.0;
  bool discouraged = false;
};

// log p(bar_a + bar_b) under the trained model for every unordered pair a < b.
std::vector<PairLikelihood> pair_likelihoods(const ModelParams& theta, const GroundTruthSpec& truth);
// True when every discouraged pair scores strictly below every other pair.
bool discouraged_pairs_ranked_lowest(const std::vector<PairLikelihood>& pairs);
// Pairs (i, j) with W0[j][i] < 0, i.e. latent i suppresses bar j.
std::vector<std::pair<std::size_t, std::size_t>> discouraged_pairs(const GroundTruthSpec& truth);

struct BarsRun {
  std::uint64_t seed = 0;
  double final_elbo = 0.0;
  double ground_truth_loglik = 0.0;
  double relative_gap = 0.0;  // |elbo - gt| / |gt|
  RecoveryReport recovery;
  std::vector<PairLikelihood> pairs;  // correlated experiments only
  bool pairs_ok = false;
  ModelParams theta;
};

struct BarsExperimentResult {
  std::vector<BarsRun> runs;
  std::size_t best = 0;  // index of the run with the highest final ELBO
  GroundTruthSpec truth;
  double ground_truth_loglik = 0.0;

  const BarsRun& best_run() const { return runs.at(best); }
  // Bars: best run recovers all bars and is within 5% of the ground-truth likelihood.
  // Correlated bars: best run ranks the discouraged pairs lowest.
  bool passed(double max_relative_gap = 0.05) const;
};

// Generates one dataset from `seed` and trains `runs` models with seeds seed+1, seed+2, ...
BarsExperimentResult run_bars_experiment(const BarsExperimentConfig& config, std::uint64_t seed,
                                         const std::function<void(const BarsRun&, int)>& on_run = {});

}  // namespace tvae
