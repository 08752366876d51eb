// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "tvae/errors.hpp"
#include "tvae/evo_encoder.hpp"

using namespace tvae;

TEST_CASE("streams are deterministic and distinct") {
  auto a = make_stream(1, 2, 3);
  auto b = make_stream(1, 2, 3);
  CHECK(a() == b());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t e = 0; e < 4; ++e)
      for (std::uint64_t n = 0; n < 4; ++n) firsts.insert(make_stream(s, e, n)());
  CHECK(firsts.size() == 64);
}

TEST_CASE("init_sets draws S distinct states per datapoint") {
  Rng rng(1);
  const auto sets = init_sets(20, 16, 6, 0.2, rng);
  CHECK(sets.size() == 20);
  CHECK(sets.set_size() == 16);
  CHECK(sets.is_valid());
  for (std::size_t n = 0; n < 20; ++n) {
    std::set<BinaryLatentState> uniq(sets[n].begin(), sets[n].end());
    CHECK(uniq.size() == 16);
  }
  // Full enumeration through the fallback sampler.
  Rng rng2(2);
  const auto full = init_sets(2, 16, 4, 0.01, rng2);
  CHECK(full.is_valid());
  CHECK_THROWS_AS(init_sets(1, 17, 4, 0.5, rng2), InvalidInput);
}

TEST_CASE("init_sets respects the Bernoulli prior on average") {
  Rng rng(3);
  const auto sets = init_sets(200, 8, 20, 0.1, rng);
  double ones = 0.0;
  for (std::size_t n = 0; n < 200; ++n)
    for (const auto& z : sets[n]) ones += static_cast<double>(z.count());
  CHECK(ones / (200.0 * 8.0 * 20.0) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("mutate flips exactly the requested number of bits") {
  Rng rng(4);
  const BinaryLatentState z(12);
  for (std::size_t k = 1; k <= 12; ++k) {
    for (int t = 0; t < 20; ++t) CHECK(hamming_distance(mutate(z, k, rng), z) == k);
  }
  CHECK_THROWS_AS(mutate(z, 13, rng), InvalidInput);
}

TEST_CASE("mutation positions are uniform") {
  Rng rng(5);
  std::vector<int> hits(8, 0);
  const BinaryLatentState z(8);
  for (int t = 0; t < 8000; ++t) {
    const auto c = mutate(z, 1, rng);
    for (std::size_t h = 0; h < 8; ++h) hits[h] += c[h];
  }
  for (int h : hits) CHECK(h == doctest::Approx(1000).epsilon(0.12));
}

TEST_CASE("single-point crossover") {
  const auto a = BinaryLatentState::from_string("111111");
  const auto b = BinaryLatentState::from_string("000000");
  const auto [c, d] = crossover_at(a, b, 2);
  CHECK(c.to_string() == "110000");
  CHECK(d.to_string() == "001111");
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto [x, y] = crossover(a, b, rng);
    CHECK(x.count() + y.count() == 6);
    CHECK(x.count() >= 1);
    CHECK(x.count() <= 5);
  }
  const auto one = BinaryLatentState::from_string("1");
  const auto [p, q] = crossover(one, BinaryLatentState(1), rng);
  CHECK(p == one);
  CHECK_THROWS_AS(crossover_at(a, BinaryLatentState(5), 1), InvalidInput);
}

TEST_CASE("parent selection is fitness proportional after the offset") {
  Rng rng(7);
  const std::vector<BinaryLatentState> states{BinaryLatentState::from_string("00"), BinaryLatentState::from_string("01"),
                                              BinaryLatentState::from_string("10")};
  const std::vector<double> fit{0.0, 1.0, 3.0};
  // weights: 0 + eps, 1 + eps, 3 + eps with eps tiny relative to the range
  std::map<std::string, int> counts;
  for (int t = 0; t < 4000; ++t)
    for (const auto& p : select_parents(states, fit, 1, 1e-9, rng)) counts[p.to_string()]++;
  CHECK(counts["00"] < 5);
  CHECK(counts["01"] == doctest::Approx(1000).epsilon(0.1));
  CHECK(counts["10"] == doctest::Approx(3000).epsilon(0.05));
  CHECK(select_parents(states, fit, 7, 0.01, rng).size() == 7);
  CHECK_THROWS_AS(select_parents(states, std::vector<double>{1.0}, 1, 0.01, rng), InvalidInput);
}

TEST_CASE("equal fitnesses select uniformly") {
  Rng rng(8);
  const auto states = oracle::all_states(2);
  std::map<std::string, int> counts;
  for (int t = 0; t < 4000; ++t)
    for (const auto& p : select_parents(states, std::vector<double>(4, -5.0), 1, 0.01, rng)) counts[p.to_string()]++;
  for (const auto& [k, v] : counts) CHECK(v == doctest::Approx(1000).epsilon(0.12));
}

TEST_CASE("evolve_set keeps S distinct, sorted, never worse states") {
  std::mt19937_64 gen(9);
  EAConfig cfg;
  cfg.set_size = 8;
  cfg.n_parents = 3;
  cfg.n_children_per_parent = 2;
  cfg.n_generations = 3;
  for (bool cross : {false, true}) {
    cfg.use_crossover = cross;
    for (int t = 0; t < 30; ++t) {
      const auto theta = oracle::random_model({7, 6, 5}, gen, 0.3);
      const auto data = oracle::random_data(1, 5, gen);
      const auto phi = oracle::random_states(7, 8, gen);
      Rng rng(static_cast<std::uint64_t>(t));
      const auto out = evolve_set(theta, data[0], phi, cfg, rng);
      REQUIRE(out.size() == 8);
      CHECK(std::set<BinaryLatentState>(out.begin(), out.end()).size() == 8);
      CHECK(truncated_log_marginal(theta, data[0], out) >= truncated_log_marginal(theta, data[0], phi));
      JointEvaluator eval(theta);
      for (std::size_t i = 0; i + 1 < out.size(); ++i)
        CHECK(eval.pseudo_log_joint(data[0], out[i]) >= eval.pseudo_log_joint(data[0], out[i + 1]));
      // Elitism: the best old state is never lost unless beaten.
      double best_old = -INFINITY;
      for (const auto& z : phi) best_old = std::max(best_old, eval.pseudo_log_joint(data[0], z));
      CHECK(eval.pseudo_log_joint(data[0], out[0]) >= best_old);
    }
  }
}

TEST_CASE("evolve_set with zero generations is the identity") {
  std::mt19937_64 gen(10);
  const auto theta = oracle::random_model({5, 4}, gen);
  const auto data = oracle::random_data(1, 4, gen);
  const auto phi = oracle::random_states(5, 6, gen);
  EAConfig cfg;
  cfg.set_size = 6;
  cfg.n_generations = 0;
  Rng rng(1);
  CHECK(evolve_set(theta, data[0], phi, cfg, rng) == phi);
}

TEST_CASE("evolve_set is deterministic for a given stream") {
  std::mt19937_64 gen(11);
  const auto theta = oracle::random_model({10, 8}, gen);
  const auto data = oracle::random_data(1, 8, gen);
  const auto phi = oracle::random_states(10, 16, gen);
  EAConfig cfg;
  cfg.set_size = 16;
  cfg.n_generations = 2;
  Rng a = make_stream(5, 1, 2), b = make_stream(5, 1, 2);
  CHECK(evolve_set(theta, data[0], phi, cfg, a) == evolve_set(theta, data[0], phi, cfg, b));
}

TEST_CASE("evolve_set finds the optimum of a small problem") {
  std::mt19937_64 gen(12);
  const auto theta = oracle::random_model({6, 10}, gen, 0.05);
  const auto data = oracle::random_data(1, 10, gen);
  JointEvaluator eval(theta);
  BinaryLatentState best;
  double best_f = -INFINITY;
  for (const auto& z : oracle::all_states(6)) {
    const double f = eval.pseudo_log_joint(data[0], z);
    if (f > best_f) best_f = f, best = z;
  }
  EAConfig cfg;
  cfg.set_size = 4;
  cfg.n_parents = 4;
  cfg.n_children_per_parent = 6;
  cfg.n_generations = 1;
  auto phi = oracle::random_states(6, 4, gen);
  Rng rng(3);
  for (int i = 0; i < 60; ++i) phi = evolve_set(eval, data[0], phi, cfg, rng);
  CHECK(phi[0] == best);
}

TEST_CASE("EA configuration validation names the offending keys") {
  EAConfig cfg;
  cfg.set_size = 3;
  cfg.n_parents = 5;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("ea.set_size") != std::string::npos);
    CHECK(msg.find("ea.parents") != std::string::npos);
  }
  EAConfig bad;
  bad.n_children_per_parent = 0;
  bad.n_bitflips = 0;
  bad.fitness_offset_eps = 0.0;
  try {
    bad.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations().size() == 3);
  }
  EAConfig flips;
  flips.n_bitflips = 9;
  CHECK_THROWS_AS(flips.validate_for(8), ConfigError);
  EAConfig big;
  big.set_size = 64;
  CHECK_THROWS_AS(big.validate_for(5), ConfigError);
  CHECK_NOTHROW(big.validate_for(6));
}
