// SPDX-License-Identifier: Apache-2.0
//
// Training loop: for every mini-batch the variational sets of the batch are evolved
// under the current parameters, then one Adam step is taken on the decoder weights
// using the q-weighted squared error. After the last batch of an epoch pi and sigma^2
// receive their closed-form updates and the truncated free energy is recomputed.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tvae/adam.hpp"
#include "tvae/dataset.hpp"
#include "tvae/evo_encoder.hpp"
#include "tvae/generative_model.hpp"
#include "tvae/lr_schedule.hpp"
#include "tvae/variational_sets.hpp"

namespace tvae {

// Shape and initial values of Theta. D comes from the data.
struct ModelSpec {
  std::size_t num_latents = 8;
  std::vector<std::size_t> hidden_layers;
  Activation hidden_activation = Activation::ReLU;
  double pi_init = 0.0;  // 0 selects 1/H
  double sigma2_init = 0.01;

  double effective_pi_init() const { return pi_init > 0.0 ? pi_init : 1.0 / static_cast<double>(num_latents); }
  std::vector<std::size_t> layer_dims(std::size_t data_dim) const;
  void validate() const;
};

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 32;
  LrSchedule schedule;
  AdamHyperparams adam;
  EAConfig ea;
  std::uint64_t seed = 0;
  bool sigma2_update = true;
  bool pi_update = true;
  unsigned workers = 1;
  // When > 0, the decoder starts as a single linear layer and is expanded with identity
  // hidden layers after this many epochs. Requires every hidden layer to have H units.
  int linear_warm_start_epochs = 0;

  void validate() const;
};

struct TrainState {
  ModelParams theta;
  VariationalSets sets;
  AdamState adam;
  int epoch = 0;  // completed epochs
  Rng shuffle_rng;
  std::size_t pending_hidden_layers = 0;  // identity layers still to insert (linear warm start)
};

struct EpochMetrics {
  int epoch = 0;
  double elbo = 0.0;
  double sigma2 = 0.0;
  double pi_mean = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

TrainState init_train_state(const Dataset& data, const ModelSpec& spec, const TrainConfig& config);

// Runs one epoch in place. Throws TrainingDivergence (with a diagnostic message) if the
// bound becomes non-finite.
EpochMetrics train_epoch(TrainState& state, const Dataset& data, const TrainConfig& config);

struct FitOptions {
  std::filesystem::path out_dir;  // empty: no files written
  int checkpoint_every = 0;       // 0: only the final checkpoint
  std::optional<std::filesystem::path> resume_from;
  std::function<void(const EpochMetrics&, const TrainState&)> on_epoch;
};

struct FitResult {
  TrainState state;
  std::vector<EpochMetrics> metrics;
};

// Trains up to config.epochs epochs. With an out_dir, writes metrics.csv (flushed per
// epoch) and checkpoints; resuming continues bit-exactly from the stored state.
FitResult fit(const Dataset& data, const ModelSpec& spec, const TrainConfig& config, const FitOptions& options = {});

inline constexpr const char* kMetricsHeader = "epoch,elbo,sigma2,pi_mean,lr,seconds";
std::string format_metrics_row(const EpochMetrics& m);

// Stable digest of everything that influences the trajectory (not epochs, not workers).
std::string training_digest(const ModelSpec& spec, const TrainConfig& config);

// 16 hex digits of FNV-1a 64.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace tvae
