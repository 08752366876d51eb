// SPDX-License-Identifier: Apache-2.0
//
// Run configuration files: flat INI sections of key = value pairs.
//
//   [run]      task, seed, workers, out_dir
//   [io]       input, clean, mask, output, checkpoint, resume
//   [model]    H, hidden, activation, pi_init, sigma2_init
//   [train]    epochs, batch_size, lr_schedule, min_lr, max_lr, epochs_per_cycle, lr_decay,
//              adam_beta1, adam_beta2, adam_eps, sigma2_update, pi_update, checkpoint_every,
//              linear_warm_start_epochs
//   [ea]       set_size, parents, children, generations, bitflips, crossover, fitness_offset_eps
//   [patches]  size, stride, mean_subtract, psnr_every
//   [noise]    sigma, seed
//   [inpaint]  missing_fraction, mask_seed
//   [bars]     side, num_points, sigma2, pi, correlated, runs
//
// Unknown sections or keys are rejected. Missing keys keep their defaults.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tvae/bars_experiment.hpp"
#include "tvae/tasks.hpp"
#include "tvae/trainer.hpp"

namespace tvae {

enum class Task { Train, Denoise, Inpaint, BarsTest, Eval };
std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct RunConfig {
  Task task = Task::Train;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string out_dir = "out";

  std::string input;
  std::string clean;
  std::string mask;
  std::string output;
  std::string checkpoint;
  std::string resume;

  ModelSpec model;
  TrainConfig train;  // train.seed and train.workers mirror seed and workers
  int checkpoint_every = 0;

  std::size_t patch_size = 8;
  std::size_t stride = 1;
  bool mean_subtract = false;
  int psnr_every = 0;

  double noise_sigma = 0.0;  // > 0: the input is clean and AWGN is added before denoising
  std::uint64_t noise_seed = 1;

  double missing_fraction = 0.0;  // > 0 without a mask file: random missing pixels
  std::uint64_t mask_seed = 1;

  std::size_t bars_side = 4;
  std::size_t bars_num_points = 500;
  double bars_sigma2 = 0.01;
  double bars_pi = 2.0 / 8.0;
  bool bars_correlated = false;
  int bars_runs = 10;

  PatchTaskConfig patch_task() const;
  BarsExperimentConfig bars_experiment() const;
};

// Defaults for `task`: the bars tasks start from the bars experiment settings.
RunConfig default_config(Task task = Task::Train);

// Parses INI text on top of `base`. Throws ParseError naming the offending section/key.
RunConfig parse_config(const std::string& text, const RunConfig& base = {});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = {});

// Canonical text: every key in a fixed order with shortest round-trip number formatting.
// parse_config(serialize_config(c)) reproduces c and serializes to identical bytes.
std::string serialize_config(const RunConfig& config);
// FNV-1a of the canonical text.
std::string config_digest(const RunConfig& config);

// Throws ConfigError listing every violated invariant.
void validate_config(const RunConfig& config);
// load_config + validate_config.
RunConfig load_and_validate(const std::filesystem::path& path, const RunConfig& base = {});

}  // namespace tvae
