// SPDX-License-Identifier: Apache-2.0
//
// Evolutionary optimization of the variational sets Phi(n).
//
// Each generation picks parents from the current pool by fitness-proportional
// selection, optionally recombines them, and flips bits to produce children; the
// children form the next pool. Every distinct child joins Phi(n), and at the end
// Phi(n) is truncated back to its S fittest members. Old members only leave Phi(n)
// when displaced by fitter states, so log sum_{z in Phi(n)} p(x, z) never decreases.

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tvae/binary_state.hpp"
#include "tvae/generative_model.hpp"
#include "tvae/variational_sets.hpp"

namespace tvae {

using Rng = std::mt19937_64;

struct EAConfig {
  std::size_t set_size = 64;  // S = |Phi(n)|
  std::size_t n_parents = 5;
  std::size_t n_children_per_parent = 4;
  std::size_t n_generations = 1;
  std::size_t n_bitflips = 1;
  bool use_crossover = false;
  // Selection offset relative to the fitness range of the pool.
  double fitness_offset_eps = 1e-2;

  // Throws ConfigError listing every violated invariant.
  void validate() const;
  void validate_for(std::size_t num_latents) const;
};

// Independent RNG stream for (seed, epoch, datapoint).
Rng make_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index);

// S distinct states per datapoint, bits i.i.d. Bernoulli(pi_init); after 100 consecutive
// duplicate draws the sampler falls back to uniform random bits. Throws InvalidInput if S > 2^H.
VariationalSets init_sets(std::size_t num_points, std::size_t set_size, std::size_t num_latents, double pi_init,
                          Rng& rng);

// Draws n_parents states with replacement, state i with probability proportional to
// fitness_i - min_j fitness_j + eps.
std::vector<BinaryLatentState> select_parents(std::span<const BinaryLatentState> states,
                                              std::span<const double> fitnesses, std::size_t n_parents, double eps,
                                              Rng& rng);

// Flips exactly n_bitflips distinct, uniformly chosen positions.
BinaryLatentState mutate(const BinaryLatentState& parent, std::size_t n_bitflips, Rng& rng);

// Single-point crossover with the cut drawn uniformly from 1..H-1. With H < 2 the parents are returned.
std::pair<BinaryLatentState, BinaryLatentState> crossover(const BinaryLatentState& a, const BinaryLatentState& b,
                                                          Rng& rng);
// Same, with an explicit cut: children are a[0..cut) + b[cut..H) and b[0..cut) + a[cut..H).
std::pair<BinaryLatentState, BinaryLatentState> crossover_at(const BinaryLatentState& a, const BinaryLatentState& b,
                                                             std::size_t cut);

// Strict total order used for truncation: higher fitness first, ties broken by lexicographic bit order.
struct FitnessOrder {
  bool operator()(const std::pair<double, const BinaryLatentState*>& a,
                  const std::pair<double, const BinaryLatentState*>& b) const {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  }
};

// Runs cfg.n_generations of the evolutionary search seeded from `phi` and returns the S
// fittest distinct states (fitness = pseudo log-joint), sorted by FitnessOrder.
// With n_generations == 0 `phi` is returned unchanged.
std::vector<BinaryLatentState> evolve_set(JointEvaluator& eval, ObservationView x,
                                          const std::vector<BinaryLatentState>& phi, const EAConfig& cfg, Rng& rng);
std::vector<BinaryLatentState> evolve_set(const ModelParams& theta, ObservationView x,
                                          const std::vector<BinaryLatentState>& phi, const EAConfig& cfg, Rng& rng);

}  // namespace tvae
