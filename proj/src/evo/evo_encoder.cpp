// SPDX-License-Identifier: Apache-2.0

#include "tvae/evo_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "tvae/errors.hpp"

namespace tvae {

bool VariationalSets::is_valid() const {
  for (const auto& phi : sets_) {
    if (phi.size() != set_size_) return false;
    std::unordered_set<BinaryLatentState, BinaryLatentStateHash> seen;
    for (const auto& z : phi) {
      if (z.size() != num_latents_ || !seen.insert(z).second) return false;
    }
  }
  return true;
}

void EAConfig::validate() const {
  std::vector<std::string> errors;
  if (set_size < 1) errors.push_back("ea.set_size must be >= 1");
  if (n_parents < 1) errors.push_back("ea.parents must be >= 1");
  if (n_children_per_parent < 1) errors.push_back("ea.children must be >= 1");
  if (n_bitflips < 1) errors.push_back("ea.bitflips must be >= 1");
  if (set_size < n_parents) {
    errors.push_back("ea.set_size (" + std::to_string(set_size) + ") must be >= ea.parents (" +
                     std::to_string(n_parents) + ")");
  }
  if (!(fitness_offset_eps > 0.0)) errors.push_back("ea.fitness_offset_eps must be > 0");
  if (!errors.empty()) throw ConfigError(errors);
}

void EAConfig::validate_for(std::size_t num_latents) const {
  validate();
  std::vector<std::string> errors;
  if (n_bitflips > num_latents) {
    errors.push_back("ea.bitflips (" + std::to_string(n_bitflips) + ") exceeds the number of latents (" +
                     std::to_string(num_latents) + ")");
  }
  if (num_latents < 63 && set_size > (std::size_t{1} << num_latents)) {
    errors.push_back("ea.set_size (" + std::to_string(set_size) + ") exceeds 2^H = " +
                     std::to_string(std::size_t{1} << num_latents));
  }
  if (!errors.empty()) throw ConfigError(errors);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t index) {
  const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) ^ epoch) ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  return Rng(seq);
}

VariationalSets init_sets(std::size_t num_points, std::size_t set_size, std::size_t num_latents, double pi_init,
                          Rng& rng) {
  if (num_latents < 64 && set_size > (std::uint64_t{1} << num_latents)) {
    throw InvalidInput("cannot draw " + std::to_string(set_size) + " distinct states from 2^" +
                       std::to_string(num_latents) + " possibilities");
  }
  if (!(pi_init >= 0.0 && pi_init <= 1.0)) throw InvalidInput("pi_init must lie in [0, 1]");
  VariationalSets sets(num_points, set_size, num_latents);
  std::bernoulli_distribution bit(pi_init);
  for (std::size_t n = 0; n < num_points; ++n) {
    auto& phi = sets[n];
    phi.reserve(set_size);
    std::unordered_set<BinaryLatentState, BinaryLatentStateHash> seen;
    std::size_t rejections = 0;
    while (phi.size() < set_size) {
      BinaryLatentState z(num_latents);
      const bool uniform = rejections >= 100;
      for (std::size_t h = 0; h < num_latents; ++h) z.set(h, uniform ? (rng() & 1U) != 0 : bit(rng));
      if (seen.insert(z).second) {
        phi.push_back(std::move(z));
        if (!uniform) rejections = 0;
      } else {
        ++rejections;
      }
    }
  }
  return sets;
}

std::vector<BinaryLatentState> select_parents(std::span<const BinaryLatentState> states,
                                              std::span<const double> fitnesses, std::size_t n_parents, double eps,
                                              Rng& rng) {
  if (states.empty() || states.size() != fitnesses.size()) {
    throw InvalidInput("select_parents: need matching, non-empty states and fitnesses");
  }
  for (double f : fitnesses) {
    if (!std::isfinite(f)) throw TrainingDivergence("non-finite fitness during parent selection");
  }
  if (!(eps > 0.0)) throw InvalidInput("select_parents: eps must be positive");
  const double lowest = *std::min_element(fitnesses.begin(), fitnesses.end());
  std::vector<double> weights(fitnesses.size());
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = fitnesses[i] - lowest + eps;
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<BinaryLatentState> parents;
  parents.reserve(n_parents);
  for (std::size_t k = 0; k < n_parents; ++k) parents.push_back(states[pick(rng)]);
  return parents;
}

BinaryLatentState mutate(const BinaryLatentState& parent, std::size_t n_bitflips, Rng& rng) {
  const std::size_t H = parent.size();
  if (n_bitflips > H) throw InvalidInput("mutate: more bit flips than bits");
  BinaryLatentState child = parent;
  // Partial Fisher-Yates: the first n_bitflips entries become a uniform sample without replacement.
  std::vector<std::size_t> idx(H);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < n_bitflips; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, H - 1);
    std::swap(idx[k], idx[pick(rng)]);
    child.flip(idx[k]);
  }
  return child;
}

std::pair<BinaryLatentState, BinaryLatentState> crossover_at(const BinaryLatentState& a, const BinaryLatentState& b,
                                                             std::size_t cut) {
  if (a.size() != b.size()) throw InvalidInput("crossover: parents differ in length");
  if (cut > a.size()) throw InvalidInput("crossover: cut beyond state length");
  BinaryLatentState c1 = a;
  BinaryLatentState c2 = b;
  for (std::size_t h = cut; h < a.size(); ++h) {
    c1.set(h, b[h]);
    c2.set(h, a[h]);
  }
  return {std::move(c1), std::move(c2)};
}

std::pair<BinaryLatentState, BinaryLatentState> crossover(const BinaryLatentState& a, const BinaryLatentState& b,
                                                          Rng& rng) {
  if (a.size() != b.size()) throw InvalidInput("crossover: parents differ in length");
  if (a.size() < 2) return {a, b};
  std::uniform_int_distribution<std::size_t> cut(1, a.size() - 1);
  return crossover_at(a, b, cut(rng));
}

std::vector<BinaryLatentState> evolve_set(JointEvaluator& eval, ObservationView x,
                                          const std::vector<BinaryLatentState>& phi, const EAConfig& cfg, Rng& rng) {
  if (cfg.n_generations == 0) return phi;
  if (phi.empty()) throw InvalidInput("evolve_set: empty variational set");

  std::unordered_map<BinaryLatentState, double, BinaryLatentStateHash> fitness;
  fitness.reserve(phi.size() + cfg.n_generations * cfg.n_parents * cfg.n_children_per_parent);
  auto fitness_of = [&](const BinaryLatentState& z) {
    auto it = fitness.find(z);
    if (it != fitness.end()) return it->second;
    const double f = eval.pseudo_log_joint(x, z);
    fitness.emplace(z, f);
    return f;
  };

  // Merged population: Phi(n) plus every distinct child.
  std::vector<BinaryLatentState> merged = phi;
  std::unordered_set<BinaryLatentState, BinaryLatentStateHash> in_merged(phi.begin(), phi.end());

  std::vector<BinaryLatentState> pool = phi;
  std::vector<double> pool_fitness(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool_fitness[i] = fitness_of(pool[i]);

  const std::size_t n_children = cfg.n_parents * cfg.n_children_per_parent;
  for (std::size_t g = 0; g < cfg.n_generations; ++g) {
    const auto [lo, hi] = std::minmax_element(pool_fitness.begin(), pool_fitness.end());
    const double eps = cfg.fitness_offset_eps * (*hi - *lo + 1e-12);
    const auto parents = select_parents(pool, pool_fitness, cfg.n_parents, eps, rng);

    std::vector<BinaryLatentState> children;
    children.reserve(n_children);
    if (cfg.use_crossover && parents.size() > 1) {
      for (std::size_t i = 0; children.size() < n_children; ++i) {
        const auto& a = parents[i % parents.size()];
        const auto& b = parents[(i + 1) % parents.size()];
        auto [c1, c2] = crossover(a, b, rng);
        children.push_back(mutate(c1, cfg.n_bitflips, rng));
        if (children.size() < n_children) children.push_back(mutate(c2, cfg.n_bitflips, rng));
      }
    } else {
      for (const auto& p : parents) {
        for (std::size_t c = 0; c < cfg.n_children_per_parent; ++c) children.push_back(mutate(p, cfg.n_bitflips, rng));
      }
    }

    pool_fitness.resize(children.size());
    for (std::size_t i = 0; i < children.size(); ++i) {
      pool_fitness[i] = fitness_of(children[i]);
      if (in_merged.insert(children[i]).second) merged.push_back(children[i]);
    }
    pool = std::move(children);
  }

  std::vector<std::pair<double, const BinaryLatentState*>> ranked;
  ranked.reserve(merged.size());
  for (const auto& z : merged) ranked.emplace_back(fitness.at(z), &z);
  const std::size_t keep = std::min(cfg.set_size, ranked.size());
  std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), FitnessOrder{});
  ranked.resize(keep);
  std::sort(ranked.begin(), ranked.end(), FitnessOrder{});

  std::vector<BinaryLatentState> out;
  out.reserve(keep);
  for (const auto& [f, z] : ranked) out.push_back(*z);
  return out;
}

std::vector<BinaryLatentState> evolve_set(const ModelParams& theta, ObservationView x,
                                          const std::vector<BinaryLatentState>& phi, const EAConfig& cfg, Rng& rng) {
  JointEvaluator eval(theta);
  return evolve_set(eval, x, phi, cfg, rng);
}

}  // namespace tvae
