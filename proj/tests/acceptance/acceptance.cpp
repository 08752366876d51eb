// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tvae/bars.hpp"
#include "tvae/bars_experiment.hpp"
#include "tvae/config.hpp"
#include "tvae/evo_encoder.hpp"
#include "tvae/image.hpp"
#include "tvae/patches.hpp"
#include "tvae/run.hpp"
#include "tvae/tasks.hpp"

using namespace tvae;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = TVAE_SOURCE_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string without_seconds(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Verdict elbo_identity() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t H = 1 + rng() % 8, D = 1 + rng() % 10, N = 1 + rng() % 3;
    const std::size_t S = 1 + rng() % std::min<std::size_t>(16, std::size_t{1} << H);
    std::vector<std::size_t> dims{H};
    for (std::size_t l = rng() % 3; l > 0; --l) dims.push_back(1 + rng() % 12);
    dims.push_back(D);
    const auto theta = oracle::random_model(dims, rng, std::uniform_real_distribution<double>(0.05, 2.0)(rng));
    const auto data = oracle::random_data(N, D, rng);
    VariationalSets sets(N, S, H);
    double ref = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      sets[n] = oracle::random_states(H, S, rng);
      ref += oracle::elbo_explicit(theta, data[n], sets[n]);
    }
    worst = std::max(worst, oracle::rel_err(elbo(theta, data, sets), ref));
  }
  return {worst <= 1e-10, "200 instances, worst relative error " + fmt(worst, 3)};
}

Verdict exact_limit() {
  std::mt19937_64 rng(102);
  double worst_q = 0.0, worst_f = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t H = 1 + rng() % 6, D = 1 + rng() % 8;
    const auto theta = oracle::random_model({H, 1 + rng() % 8, D}, rng, std::uniform_real_distribution<double>(0.2, 2.0)(rng));
    const auto data = oracle::random_data(2, D, rng);
    const auto all = oracle::all_states(H);
    VariationalSets sets(2, all.size(), H);
    double exact = 0.0;
    for (std::size_t n = 0; n < 2; ++n) {
      sets[n] = all;
      exact += oracle::exact_log_marginal(theta, data[n]);
      // Bayes posterior by enumeration, normalized in extended precision.
      std::vector<long double> lj;
      for (const auto& z : all) lj.push_back(oracle::log_joint(theta, data[n], z));
      const long double m = *std::max_element(lj.begin(), lj.end());
      long double s = 0.0L;
      for (auto v : lj) s += std::exp(v - m);
      const auto q = q_weights(theta, data[n], all);
      for (std::size_t k = 0; k < all.size(); ++k)
        worst_q = std::max(worst_q, static_cast<double>(std::abs(q[k] - std::exp(lj[k] - m) / s)));
    }
    worst_f = std::max(worst_f, std::abs(elbo(theta, data, sets) - exact));
  }
  return {worst_q <= 1e-12 && worst_f <= 1e-12,
          "50 instances, max |q - posterior| " + fmt(worst_q, 3) + ", max |F - log p| " + fmt(worst_f, 3)};
}

Verdict gradient_check() {
  std::mt19937_64 rng(103);
  const std::vector<std::vector<std::size_t>> shapes{{4, 6}, {5, 7, 6}, {8, 16, 16}, {6, 10, 8, 9}};
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto& dims = shapes[t % shapes.size()];
    const auto net = oracle::random_net(dims, rng, 0.8);
    std::vector<double> x(dims.back());
    std::normal_distribution<double> g;
    for (double& v : x) v = g(rng);
    const std::size_t S = 1 + rng() % 6;
    const auto states = oracle::random_states(dims[0], S, rng);
    std::vector<double> w(S);
    double s = 0.0;
    for (double& v : w) s += (v = std::uniform_real_distribution<double>(0.05, 1.0)(rng));
    for (double& v : w) v /= s;
    std::vector<std::uint8_t> mask;
    if (t % 2) {
      mask.assign(x.size(), 1);
      for (std::size_t d = t % 3; d < mask.size(); d += 3) mask[d] = 0;
    }
    const auto grad = backward_weighted_mse(net, x, states, w, mask);
    const double h = 1e-5;
    for (std::size_t i = 0; i < net.num_params(); ++i) {
      DecoderNet plus = net, minus = net;
      plus.params()[i] += h;
      minus.params()[i] -= h;
      const double fd =
          (oracle::weighted_mse(plus, x, states, w, mask) - oracle::weighted_mse(minus, x, states, w, mask)) / (2 * h);
      if (std::abs(fd) < 1e-9 && std::abs(grad[i]) < 1e-9) continue;
      worst = std::max(worst, oracle::rel_err(grad[i], fd));
    }
  }
  return {worst <= 1e-4, "50 nets up to 8-16-16, worst relative error " + fmt(worst, 3)};
}

Verdict estep_monotone() {
  std::mt19937_64 rng(104);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t H = 4 + rng() % 7, D = 2 + rng() % 8;
    const auto theta = oracle::random_model({H, 1 + rng() % 10, D}, rng, std::uniform_real_distribution<double>(0.05, 2.0)(rng));
    const auto data = oracle::random_data(1, D, rng);
    EAConfig cfg;
    cfg.set_size = 2 + rng() % 12;
    cfg.n_parents = 1 + rng() % cfg.set_size;
    cfg.n_children_per_parent = 1 + rng() % 4;
    cfg.n_generations = 1 + rng() % 3;
    cfg.n_bitflips = 1 + rng() % 2;
    cfg.use_crossover = t % 2 == 1;
    const auto phi = oracle::random_states(H, cfg.set_size, rng);
    Rng stream = make_stream(104, 0, static_cast<std::uint64_t>(t));
    const auto out = evolve_set(theta, data[0], phi, cfg, stream);
    if (truncated_log_marginal(theta, data[0], out) < truncated_log_marginal(theta, data[0], phi)) ++violations;
  }
  return {violations == 0, "1000 trials, " + std::to_string(violations) + " decreases"};
}

Verdict swap_criterion() {
  std::mt19937_64 rng(105);
  const auto all = oracle::all_states(5);
  int checked = 0, violations = 0;
  for (int t = 0; t < 20; ++t) {
    // sigma2 keeps the 32 joints within double resolution of each other
    const auto theta = oracle::random_model({5, 6, 7}, rng, std::uniform_real_distribution<double>(1.0, 3.0)(rng));
    const auto data = oracle::random_data(1, 7, rng);
    const std::size_t S = 2 + rng() % 10;
    VariationalSets sets(1, S, 5);
    sets[0] = oracle::random_states(5, S, rng);
    const double base = elbo(theta, data, sets);
    for (std::size_t k = 0; k < S; ++k) {
      for (const auto& z : all) {
        if (std::find(sets[0].begin(), sets[0].end(), z) != sets[0].end()) continue;
        auto swapped = sets;
        swapped[0][k] = z;
        const bool up = elbo(theta, data, swapped) > base;
        violations += up != (log_joint(theta, data[0], z) > log_joint(theta, data[0], sets[0][k]));
        ++checked;
      }
    }
  }
  return {violations == 0, std::to_string(checked) + " swaps on H=5, " + std::to_string(violations) + " violations"};
}

Verdict mstep_monotone() {
  std::mt19937_64 rng(106);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t H = 2 + rng() % 7, D = 2 + rng() % 8, N = 2 + rng() % 10;
    auto theta = oracle::random_model({H, 1 + rng() % 8, D}, rng, std::uniform_real_distribution<double>(0.01, 5.0)(rng));
    const auto data = oracle::random_data(N, D, rng);
    const std::size_t S = 1 + rng() % std::min<std::size_t>(8, std::size_t{1} << H);
    VariationalSets sets(N, S, H);
    for (std::size_t n = 0; n < N; ++n) sets[n] = oracle::random_states(H, S, rng);
    const double before = elbo(theta, data, sets);
    const auto u = update_pi_sigma(theta, data, sets);
    theta.pi = u.pi;
    theta.sigma2 = u.sigma2;
    worst = std::max(worst, before - elbo(theta, data, sets));
  }
  return {worst <= 1e-8, "200 instances, largest decrease " + fmt(std::max(worst, 0.0), 3)};
}

BarsExperimentResult bars_from_preset(const std::string& preset) {
  const RunConfig c = load_and_validate(kSource / "presets" / preset);
  return run_bars_experiment(c.bars_experiment(), c.seed, [](const BarsRun& r, int i) {
    std::cout << "    run " << i << ": elbo " << fmt(r.final_elbo, 6) << ", gap " << fmt(r.relative_gap, 3)
              << ", min cosine " << fmt(r.recovery.min_cosine, 3) << (r.pairs.empty() ? "" : r.pairs_ok ? ", pairs ok" : ", pairs not ok")
              << "\n"
              << std::flush;
  });
}

Verdict bars_recovery_check() {
  const auto r = bars_from_preset("bars.cfg");
  const auto& b = r.best_run();
  return {r.passed(), "best run " + std::to_string(r.best) + ": min cosine " + fmt(b.recovery.min_cosine, 3) +
                          ", ELBO " + fmt(b.final_elbo, 6) + " vs log p " + fmt(r.ground_truth_loglik, 6) +
                          " (gap " + fmt(b.relative_gap, 3) + ")"};
}

Verdict correlated_bars_check() {
  const auto r = bars_from_preset("correlated_bars.cfg");
  const auto& b = r.best_run();
  double worst_discouraged = -INFINITY, best_other = INFINITY;
  for (const auto& p : b.pairs) {
    if (p.discouraged)
      worst_discouraged = std::max(worst_discouraged, p.log_px);
    else
      best_other = std::min(best_other, p.log_px);
  }
  return {r.passed(), "best run " + std::to_string(r.best) + ": highest discouraged log p " + fmt(worst_discouraged, 5) +
                          ", lowest other " + fmt(best_other, 5)};
}

Verdict desk_denoise() {
  const RunConfig c = load_and_validate(kSource / "presets" / "desk_denoise.cfg");
  const Image clean = synthetic_scene(64, 64);
  const Image noisy = add_awgn(clean, c.noise_sigma, c.noise_seed);
  const double baseline = 20.0 * std::log10(255.0 / c.noise_sigma);
  const auto r = denoise(noisy, c.patch_task(), &clean);
  const bool ok = c.noise_sigma == 25.0 && c.model.num_latents == 32 && c.train.ea.set_size == 32 &&
                  c.patch_size == 8 && c.train.epochs == 100 && *r.psnr >= baseline + 3.0;
  return {ok, "PSNR " + fmt(*r.psnr, 4) + " dB (noisy " + fmt(psnr(noisy, clean), 4) + ", target " +
                  fmt(baseline + 3.0, 4) + ")"};
}

Verdict benchmark_assets() {
  std::vector<std::string> problems;
  for (const char* p : {"house_sigma15.cfg", "house_sigma25.cfg", "house_sigma50.cfg", "house_inpaint.cfg"}) {
    try {
      load_and_validate(kSource / "presets" / p);
    } catch (const std::exception& e) {
      problems.push_back(std::string(p) + ": " + e.what());
    }
  }
  for (const char* s : {"house_denoise.sh", "house_inpaint.sh", "run_benchmarks.sh"}) {
    const auto path = kSource / "scripts" / s;
    if (!fs::exists(path) || (fs::status(path).permissions() & fs::perms::owner_exec) == fs::perms::none)
      problems.push_back(std::string(s) + " missing or not executable");
  }
  std::string detail = "4 presets valid, 3 scripts present; not run here";
  if (!problems.empty()) detail = problems.front();
  return {problems.empty(), detail};
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "tvae_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto g = gen_bars(4, 120, 0.01, 0.25, 5);
  write_csv_matrix(root / "bars.csv", g.data);
  write_pgm(root / "scene.pgm", synthetic_scene(20, 20));
  std::ofstream(root / "train.cfg") << "[io]\ninput = " << (root / "bars.csv").string()
                                    << "\n[model]\nH = 8\nhidden = 8\nsigma2_init = 1\n"
                                       "[train]\nepochs = 8\nmin_lr = 0.001\nmax_lr = 0.02\nepochs_per_cycle = 4\n"
                                       "checkpoint_every = 4\n[ea]\nset_size = 16\ngenerations = 2\ncrossover = true\n";
  std::ofstream(root / "denoise.cfg") << "[run]\ntask = denoise\n[io]\ninput = " << (root / "scene.pgm").string()
                                      << "\n[noise]\nsigma = 25\n[model]\nH = 8\nhidden = 8\n"
                                         "[train]\nepochs = 4\nmin_lr = 0.01\nmax_lr = 1\n[ea]\nset_size = 8\n"
                                         "[patches]\nsize = 5\nmean_subtract = true\n";
  auto go = [&](const std::string& task, const std::string& cfg, const std::string& dir, const std::string& workers) {
    std::ostringstream out, err;
    return run({task, "--config", (root / cfg).string(), "--seed", "3", "--workers", workers, "--out-dir",
                (root / dir).string()},
               out, err);
  };
  std::vector<std::string> mismatches;
  for (const auto& [task, cfg] : std::vector<std::pair<std::string, std::string>>{{"train", "train.cfg"},
                                                                                   {"denoise", "denoise.cfg"}}) {
    const std::string a = task + "_w1a", b = task + "_w1b", c = task + "_w3";
    if (go(task, cfg, a, "1") || go(task, cfg, b, "1") || go(task, cfg, c, "3")) {
      mismatches.push_back(task + " run failed");
      continue;
    }
    for (const auto& other : {b, c}) {
      if (slurp(root / a / "checkpoint.tvck") != slurp(root / other / "checkpoint.tvck"))
        mismatches.push_back(task + " checkpoint " + other);
      if (without_seconds(slurp(root / a / "metrics.csv")) != without_seconds(slurp(root / other / "metrics.csv")))
        mismatches.push_back(task + " metrics " + other);
    }
    if (task == "train" && slurp(root / a / "checkpoint_epoch00004.tvck") != slurp(root / c / "checkpoint_epoch00004.tvck"))
      mismatches.push_back("train periodic checkpoint");
    if (task == "denoise" && slurp(root / a / "denoised.pgm") != slurp(root / c / "denoised.pgm"))
      mismatches.push_back("denoised image");
  }
  fs::remove_all(root);
  std::string detail = "train and denoise, workers 1/1/3: checkpoints, metrics and outputs identical";
  if (!mismatches.empty()) detail = "differs: " + mismatches.front();
  return {mismatches.empty(), detail};
}

Verdict merge_identity() {
  std::mt19937_64 rng(112);
  int exact = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t h = 1 + rng() % 40, w = 1 + rng() % 40;
    const std::size_t ph = 1 + rng() % std::min<std::size_t>(h, 12), pw = 1 + rng() % std::min<std::size_t>(w, 12);
    const std::size_t stride = 1 + rng() % std::min(ph, pw);
    Image img(h, w);
    std::uniform_real_distribution<double> u(0.0, 255.0);
    for (double& v : img.pixels) v = u(rng);
    const auto ps = extract_patches(img, ph, pw, stride, nullptr);
    exact += merge_patches(ps.data.raw_values(), ps.grid) == img;
  }
  return {exact == 20, std::to_string(exact) + "/20 geometries reproduced bit for bit"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "ELBO identity", elbo_identity},
      {2, "exact-posterior limit", exact_limit},
      {3, "gradient correctness", gradient_check},
      {4, "E-step monotonicity", estep_monotone},
      {5, "swap criterion", swap_criterion},
      {6, "M-step monotonicity", mstep_monotone},
      {7, "bars recovery", bars_recovery_check},
      {8, "correlated bars pair ranking", correlated_bars_check},
      {9, "desk-scale denoising", desk_denoise},
      {10, "long-running benchmark presets and scripts", benchmark_assets},
      {11, "determinism across worker counts", determinism},
      {12, "extract-merge identity", merge_identity},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !v.pass;
    std::cout << "criterion " << c.id << " [" << c.name << "]: " << (v.pass ? "PASS" : "FAIL") << " - " << v.detail
              << " (" << fmt(secs, 3) << " s)\n"
              << std::flush;
  }
  return failures == 0 ? 0 : 1;
}
