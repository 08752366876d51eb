// SPDX-License-Identifier: Apache-2.0

#include "tvae/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tvae/checkpoint.hpp"
#include "tvae/errors.hpp"
#include "tvae/parallel.hpp"

namespace tvae {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Seed offsets for the independent initialization streams.
constexpr std::uint64_t kNetStream = 0x6e6574;
constexpr std::uint64_t kSetsStream = 0x706869;
constexpr std::uint64_t kShuffleStream = 0x73687566;

}  // namespace

std::vector<std::size_t> ModelSpec::layer_dims(std::size_t data_dim) const {
  std::vector<std::size_t> dims{num_latents};
  dims.insert(dims.end(), hidden_layers.begin(), hidden_layers.end());
  dims.push_back(data_dim);
  return dims;
}

void ModelSpec::validate() const {
  std::vector<std::string> errors;
  if (num_latents < 1) errors.push_back("model.H must be >= 1");
  for (auto m : hidden_layers) {
    if (m < 1) errors.push_back("model.hidden sizes must be >= 1");
  }
  if (!(pi_init >= 0.0 && pi_init < 1.0)) errors.push_back("model.pi_init must lie in [0, 1) (0 selects 1/H)");
  if (!(sigma2_init > 0.0)) errors.push_back("model.sigma2_init must be > 0");
  if (!errors.empty()) throw ConfigError(errors);
}

void TrainConfig::validate() const {
  std::vector<std::string> errors;
  if (epochs < 1) errors.push_back("train.epochs must be >= 1");
  if (batch_size < 1) errors.push_back("train.batch_size must be >= 1");
  try {
    schedule.validate();
  } catch (const InvalidInput& e) {
    errors.push_back(std::string("train: ") + e.what());
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) errors.push_back("train.adam_beta1 must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) errors.push_back("train.adam_beta2 must lie in [0, 1)");
  if (!(adam.eps > 0.0)) errors.push_back("train.adam_eps must be > 0");
  if (linear_warm_start_epochs < 0) errors.push_back("train.linear_warm_start_epochs must be >= 0");
  try {
    ea.validate();
  } catch (const ConfigError& e) {
    errors.insert(errors.end(), e.violations().begin(), e.violations().end());
  }
  if (!errors.empty()) throw ConfigError(errors);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

std::string training_digest(const ModelSpec& spec, const TrainConfig& c) {
  std::ostringstream s;
  s << "H=" << spec.num_latents << ";hidden=";
  for (auto m : spec.hidden_layers) s << m << ',';
  s << ";act=" << to_string(spec.hidden_activation) << ";pi_init=" << fmt_double(spec.pi_init)
    << ";sigma2_init=" << fmt_double(spec.sigma2_init) << ";batch=" << c.batch_size
    << ";sched=" << to_string(c.schedule.kind) << ',' << fmt_double(c.schedule.min_lr) << ','
    << fmt_double(c.schedule.max_lr) << ',' << c.schedule.epochs_per_cycle << ',' << fmt_double(c.schedule.decay)
    << ";adam=" << fmt_double(c.adam.beta1) << ',' << fmt_double(c.adam.beta2) << ',' << fmt_double(c.adam.eps)
    << ";ea=" << c.ea.set_size << ',' << c.ea.n_parents << ',' << c.ea.n_children_per_parent << ','
    << c.ea.n_generations << ',' << c.ea.n_bitflips << ',' << c.ea.use_crossover << ','
    << fmt_double(c.ea.fitness_offset_eps) << ";seed=" << c.seed << ";upd=" << c.sigma2_update << c.pi_update
    << ";warm=" << c.linear_warm_start_epochs;
  return fnv1a_hex(s.str());
}

std::string format_metrics_row(const EpochMetrics& m) {
  return std::to_string(m.epoch) + ',' + fmt_double(m.elbo) + ',' + fmt_double(m.sigma2) + ',' +
         fmt_double(m.pi_mean) + ',' + fmt_double(m.lr) + ',' + fmt_double(m.seconds);
}

TrainState init_train_state(const Dataset& data, const ModelSpec& spec, const TrainConfig& config) {
  spec.validate();
  config.validate();
  config.ea.validate_for(spec.num_latents);
  if (data.size() == 0) throw InvalidInput("cannot train on an empty dataset");
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto x = data[n];
    for (std::size_t d = 0; d < x.values.size(); ++d) {
      if (x.is_observed(d) && !std::isfinite(x.values[d])) {
        throw InvalidInput("non-finite observed value in datapoint " + std::to_string(n));
      }
    }
  }

  TrainState state;
  std::vector<std::size_t> dims = spec.layer_dims(data.dim());
  if (config.linear_warm_start_epochs > 0 && !spec.hidden_layers.empty()) {
    for (auto m : spec.hidden_layers) {
      if (m != spec.num_latents) {
        throw ConfigError({"train.linear_warm_start_epochs requires every hidden layer to have H units"});
      }
    }
    state.pending_hidden_layers = spec.hidden_layers.size();
    dims = {spec.num_latents, data.dim()};
  }
  state.theta.net = init_net(dims, config.seed ^ kNetStream, spec.hidden_activation);
  state.theta.pi.assign(spec.num_latents, spec.effective_pi_init());
  state.theta.sigma2 = spec.sigma2_init;
  state.theta.clamp();

  Rng sets_rng = make_stream(config.seed, kSetsStream, 0);
  state.sets = init_sets(data.size(), config.ea.set_size, spec.num_latents, spec.effective_pi_init(), sets_rng);
  state.adam = AdamState(state.theta.net.num_params(), config.adam);
  state.shuffle_rng = make_stream(config.seed, kShuffleStream, 0);
  return state;
}

EpochMetrics train_epoch(TrainState& state, const Dataset& data, const TrainConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  if (state.sets.size() != data.size()) throw InvalidInput("variational sets and dataset differ in size");
  if (data.dim() != state.theta.dim()) throw InvalidInput("dataset dimension does not match the decoder");

  if (state.pending_hidden_layers > 0 && state.epoch >= config.linear_warm_start_epochs) {
    state.theta.net = expand_with_identity_layers(state.theta.net, state.pending_hidden_layers);
    state.adam = AdamState(state.theta.net.num_params(), config.adam);
    state.pending_hidden_layers = 0;
  }

  const int epoch = state.epoch;
  const double lr = lr_at(config.schedule, epoch);
  const unsigned workers = std::max(1U, config.workers);
  auto& theta = state.theta;
  const std::size_t P = theta.net.num_params();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), state.shuffle_rng);

  std::vector<JointEvaluator> evals;
  for (unsigned w = 0; w < workers; ++w) evals.emplace_back(theta);

  const std::size_t B = config.batch_size;
  std::vector<std::vector<double>> item_grads(std::min(B, data.size()), std::vector<double>(P));
  std::vector<double> grad(P);

  for (std::size_t begin = 0; begin < order.size(); begin += B) {
    const std::size_t count = std::min(B, order.size() - begin);
    parallel_for(count, workers, [&](std::size_t i, unsigned w) {
      const std::size_t n = order[begin + i];
      auto& eval = evals[w];
      const auto x = data[n];
      Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(epoch), n);
      state.sets[n] = evolve_set(eval, x, state.sets[n], config.ea, rng);

      const auto& phi = state.sets[n];
      const std::size_t observed = x.observed_count();
      std::vector<double> lj(phi.size());
      for (std::size_t k = 0; k < phi.size(); ++k) {
        lj[k] = eval.log_joint_from_pseudo(eval.pseudo_log_joint(x, phi[k]), observed);
      }
      const auto q = q_weights_from_log_joints(lj);
      auto& g = item_grads[i];
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t k = 0; k < phi.size(); ++k) {
        if (q[k] == 0.0) continue;
        eval.mean(phi[k]);
        accumulate_mse_gradient(theta.net, x.values, x.observed, q[k], eval.cache(), g);
      }
    });

    // Ordered reduction keeps the result independent of the worker count.
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& g = item_grads[i];
      for (std::size_t p = 0; p < P; ++p) grad[p] += g[p];
    }
    // Descent on (1 / 2 sigma^2) sum q ||x - mu||^2, i.e. ascent on F.
    const double scale = 1.0 / (2.0 * theta.sigma2);
    for (double& v : grad) v *= scale;
    adam_step(theta.net.params(), grad, state.adam, lr);
  }

  if (config.pi_update || config.sigma2_update) {
    auto upd = update_pi_sigma(theta, data, state.sets, workers);
    if (config.pi_update) theta.pi = std::move(upd.pi);
    if (config.sigma2_update) theta.sigma2 = upd.sigma2;
    theta.clamp();
  }

  EpochMetrics m;
  m.epoch = epoch;
  m.elbo = elbo(theta, data, state.sets, workers);
  m.sigma2 = theta.sigma2;
  m.pi_mean = std::accumulate(theta.pi.begin(), theta.pi.end(), 0.0) / static_cast<double>(theta.pi.size());
  m.lr = lr;
  state.epoch += 1;
  m.seconds = std::chrono::duration<double>(Clock::now() - start).count();

  if (!std::isfinite(m.elbo)) {
    auto [lo, hi] = std::minmax_element(theta.pi.begin(), theta.pi.end());
    std::ostringstream msg;
    msg << "training diverged in epoch " << epoch << ": free energy is " << m.elbo << " (sigma2=" << theta.sigma2
        << (theta.sigma2 <= kSigma2Floor ? " at its floor" : "") << ", pi in [" << *lo << ", " << *hi
        << "], lr=" << lr << ")";
    throw TrainingDivergence(msg.str());
  }
  return m;
}

namespace {

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch) {
  char name[64];
  std::snprintf(name, sizeof name, "checkpoint_epoch%05d.tvck", epoch);
  return dir / name;
}

std::vector<std::string> read_metric_rows_up_to(const std::filesystem::path& path, int completed_epochs) {
  std::vector<std::string> rows;
  std::ifstream in(path);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    const int e = std::stoi(line.substr(0, line.find(',')));
    if (e < completed_epochs) rows.push_back(line);
  }
  return rows;
}

}  // namespace

FitResult fit(const Dataset& data, const ModelSpec& spec, const TrainConfig& config, const FitOptions& options) {
  const std::string digest = training_digest(spec, config);
  FitResult result;
  if (options.resume_from) {
    const Checkpoint ck = load_checkpoint(*options.resume_from);
    if (ck.config_digest != digest) {
      throw CheckpointError("checkpoint " + options.resume_from->string() + " was written with configuration digest " +
                            ck.config_digest + ", current configuration has digest " + digest);
    }
    result.state = restore_state(ck);
    config.validate();
  } else {
    result.state = init_train_state(data, spec, config);
  }

  std::ofstream metrics_out;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    const auto metrics_path = options.out_dir / "metrics.csv";
    std::vector<std::string> kept;
    if (options.resume_from && std::filesystem::exists(metrics_path)) {
      kept = read_metric_rows_up_to(metrics_path, result.state.epoch);
    }
    metrics_out.open(metrics_path, std::ios::trunc);
    if (!metrics_out) throw Error("cannot write " + metrics_path.string());
    metrics_out << kMetricsHeader << '\n';
    for (const auto& r : kept) metrics_out << r << '\n';
    metrics_out.flush();
  }

  while (result.state.epoch < config.epochs) {
    const auto m = train_epoch(result.state, data, config);
    result.metrics.push_back(m);
    if (metrics_out.is_open()) {
      metrics_out << format_metrics_row(m) << '\n';
      metrics_out.flush();
    }
    if (!options.out_dir.empty() && options.checkpoint_every > 0 && result.state.epoch % options.checkpoint_every == 0 &&
        result.state.epoch < config.epochs) {
      save_checkpoint(checkpoint_path(options.out_dir, result.state.epoch), make_checkpoint(result.state, digest));
    }
    if (options.on_epoch) options.on_epoch(m, result.state);
  }
  if (!options.out_dir.empty()) {
    save_checkpoint(options.out_dir / "checkpoint.tvck", make_checkpoint(result.state, digest));
  }
  return result;
}

}  // namespace tvae
