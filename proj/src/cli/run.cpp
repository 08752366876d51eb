// SPDX-License-Identifier: Apache-2.0

#include "tvae/run.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>

#include "tvae/bars_experiment.hpp"
#include "tvae/checkpoint.hpp"
#include "tvae/config.hpp"
#include "tvae/errors.hpp"
#include "tvae/image.hpp"
#include "tvae/tasks.hpp"

namespace tvae {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double pi_mean(const ModelParams& theta) {
  return std::accumulate(theta.pi.begin(), theta.pi.end(), 0.0) / static_cast<double>(theta.pi.size());
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
};

RunConfig resolve(Task task, const Flags& flags) {
  RunConfig base = default_config(task);
  if (const char* env = std::getenv("TVAE_WORKERS"); env && *env) {
    unsigned w = 0;
    const std::string s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), w);
    if (ec != std::errc{} || ptr != s.data() + s.size() || w < 1)
      throw ConfigError({"environment variable TVAE_WORKERS must be a positive integer, got '" + s + "'"});
    base.workers = w;
  }
  RunConfig c = base;
  if (!flags.config.empty()) {
    try {
      c = load_config(flags.config, base);
    } catch (const ParseError& e) {
      throw ConfigError({e.what()});
    }
  }
  if (c.task != task)
    throw ConfigError({"run.task is '" + to_string(c.task) + "' but the subcommand is '" + to_string(task) + "'"});
  if (flags.seed) c.seed = *flags.seed;
  if (flags.workers) c.workers = *flags.workers;
  if (flags.out_dir) c.out_dir = *flags.out_dir;
  c.train.seed = c.seed;
  c.train.workers = c.workers;
  validate_config(c);
  return c;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw InvalidInput(std::string(what) + " '" + path + "' does not exist");
}

ordered_json manifest_base(const RunConfig& c) {
  ordered_json m;
  m["tool"] = "tvae";
  m["version"] = kVersion;
  m["task"] = to_string(c.task);
  m["seed"] = c.seed;
  m["workers"] = c.workers;
  m["config_digest"] = config_digest(c);
  m["training_digest"] = training_digest(c.model, c.train);
  m["checkpoint_format_version"] = kCheckpointFormatVersion;
  m["config"] = serialize_config(c);
  return m;
}

void write_run_files(const RunConfig& c, const ordered_json& manifest) {
  fs::create_directories(c.out_dir);
  std::ofstream(fs::path(c.out_dir) / "config.cfg", std::ios::binary) << serialize_config(c);
  std::ofstream(fs::path(c.out_dir) / "manifest.json", std::ios::binary) << manifest.dump(2) << "\n";
}

ordered_json metrics_summary(const std::vector<EpochMetrics>& metrics) {
  ordered_json s;
  s["epochs"] = metrics.size();
  if (!metrics.empty()) {
    s["final_elbo"] = metrics.back().elbo;
    s["final_sigma2"] = metrics.back().sigma2;
    s["final_pi_mean"] = metrics.back().pi_mean;
    double seconds = 0.0;
    for (const auto& m : metrics) seconds += m.seconds;
    s["train_seconds"] = seconds;
  }
  return s;
}

FitOptions fit_options(const RunConfig& c, std::ostream& out) {
  FitOptions o;
  o.out_dir = c.out_dir;
  o.checkpoint_every = c.checkpoint_every;
  if (!c.resume.empty()) {
    require_file(c.resume, "checkpoint");
    o.resume_from = c.resume;
  }
  o.on_epoch = [&out](const EpochMetrics& m, const TrainState&) {
    out << "epoch=" << m.epoch << " elbo=" << num(m.elbo) << " sigma2=" << num(m.sigma2)
        << " pi_mean=" << num(m.pi_mean) << " lr=" << num(m.lr) << "\n"
        << std::flush;
  };
  return o;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
  require_file(c.input, "input data");
  const Dataset data = read_csv_matrix(c.input);
  fs::create_directories(c.out_dir);
  FitResult r = fit(data, c.model, c.train, fit_options(c, out));
  auto m = manifest_base(c);
  m["data"] = {{"path", c.input}, {"num_points", data.size()}, {"dim", data.dim()}};
  m["metrics"] = metrics_summary(r.metrics);
  m["outputs"] = ordered_json::array({"metrics.csv", "checkpoint.tvck"});
  write_run_files(c, m);
  out << "checkpoint=" << (fs::path(c.out_dir) / "checkpoint.tvck").string() << "\n";
  return kExitOk;
}

void write_psnr_trace(const fs::path& path, const std::vector<std::pair<int, double>>& trace) {
  std::ofstream f(path, std::ios::binary);
  f << "epoch,psnr\n";
  for (const auto& [e, p] : trace) f << e << "," << num(p) << "\n";
}

void report_image_result(const RunConfig& c, const DenoiseResult& r, const char* default_name,
                         ordered_json& manifest, std::ostream& out) {
  const fs::path output = c.output.empty() ? fs::path(c.out_dir) / default_name : fs::path(c.output);
  write_pgm(output, r.image);
  manifest["outputs"].push_back(output.string());
  manifest["metrics"] = metrics_summary(r.metrics);
  manifest["metrics"]["num_patches"] = r.num_patches;
  manifest["metrics"]["excluded_patches"] = r.excluded_patches;
  manifest["metrics"]["seconds"] = r.seconds;
  if (r.psnr) {
    manifest["metrics"]["psnr"] = num(*r.psnr);
    manifest["metrics"]["psnr_quantized"] = num(*r.psnr_quantized);
    out << "psnr=" << num(*r.psnr) << " psnr_quantized=" << num(*r.psnr_quantized) << "\n";
  }
  if (!r.psnr_trace.empty()) {
    write_psnr_trace(fs::path(c.out_dir) / "psnr_trace.csv", r.psnr_trace);
    manifest["outputs"].push_back("psnr_trace.csv");
  }
  out << "output=" << output.string() << "\n";
}

int cmd_denoise(const RunConfig& c, std::ostream& out) {
  require_file(c.input, "input image");
  const Image input = read_pgm(c.input);
  std::optional<Image> clean;
  Image noisy = input;
  fs::create_directories(c.out_dir);
  auto m = manifest_base(c);
  m["outputs"] = ordered_json::array({"metrics.csv", "checkpoint.tvck"});
  if (c.noise_sigma > 0.0) {
    clean = input;
    noisy = add_awgn(input, c.noise_sigma, c.noise_seed);
    write_pgm(fs::path(c.out_dir) / "noisy.pgm", noisy);
    m["outputs"].push_back("noisy.pgm");
    out << "noisy_psnr=" << num(psnr(noisy, *clean)) << "\n";
  } else if (!c.clean.empty()) {
    require_file(c.clean, "clean reference image");
    clean = read_pgm(c.clean);
  }
  const DenoiseResult r = denoise(noisy, c.patch_task(), clean ? &*clean : nullptr, fit_options(c, out));
  report_image_result(c, r, "denoised.pgm", m, out);
  if (clean) m["metrics"]["noisy_psnr"] = num(psnr(noisy, *clean));
  write_run_files(c, m);
  return kExitOk;
}

int cmd_inpaint(const RunConfig& c, std::ostream& out) {
  require_file(c.input, "input image");
  const Image input = read_pgm(c.input);
  std::optional<Image> clean;
  PixelMask mask;
  if (!c.mask.empty()) {
    require_file(c.mask, "mask image");
    const Image mimg = read_pgm(c.mask);
    if (mimg.height != input.height || mimg.width != input.width)
      throw InvalidInput("mask '" + c.mask + "' differs in size from the input image");
    mask = {mimg.height, mimg.width, std::vector<std::uint8_t>(mimg.size())};
    for (std::size_t i = 0; i < mimg.size(); ++i) mask.observed[i] = mimg.pixels[i] > 0.0 ? 1 : 0;
    if (!c.clean.empty()) {
      require_file(c.clean, "clean reference image");
      clean = read_pgm(c.clean);
    }
  } else {
    mask = random_missing_mask(input.height, input.width, c.missing_fraction, c.mask_seed);
    clean = input;
  }
  fs::create_directories(c.out_dir);
  auto m = manifest_base(c);
  m["outputs"] = ordered_json::array({"metrics.csv", "checkpoint.tvck", "corrupted.pgm"});
  Image corrupted = input;
  for (std::size_t i = 0; i < corrupted.size(); ++i)
    if (!mask.observed[i]) corrupted.pixels[i] = 0.0;
  write_pgm(fs::path(c.out_dir) / "corrupted.pgm", corrupted);
  out << "missing_pixels=" << mask.missing_count() << "\n";
  const DenoiseResult r = inpaint(input, mask, c.patch_task(), clean ? &*clean : nullptr, fit_options(c, out));
  report_image_result(c, r, "inpainted.pgm", m, out);
  write_run_files(c, m);
  return kExitOk;
}

int cmd_bars(const RunConfig& c, std::ostream& out) {
  const BarsExperimentConfig cfg = c.bars_experiment();
  out << "ground_truth_loglik=";
  const auto result = run_bars_experiment(cfg, c.seed, [&](const BarsRun& r, int i) {
    if (i == 0) out << num(r.ground_truth_loglik) << "\n";
    out << "run=" << i << " seed=" << r.seed << " elbo=" << num(r.final_elbo) << " gap=" << num(r.relative_gap)
        << " min_cosine=" << num(r.recovery.min_cosine) << " recovered=" << (r.recovery.recovered ? "yes" : "no");
    if (cfg.correlated) out << " pairs_ranked=" << (r.pairs_ok ? "yes" : "no");
    out << "\n" << std::flush;
  });
  const bool ok = result.passed();
  out << "best_run=" << result.best << " verdict=" << (ok ? "PASS" : "FAIL") << "\n";

  auto m = manifest_base(c);
  ordered_json runs = ordered_json::array();
  for (const auto& r : result.runs)
    runs.push_back({{"seed", r.seed},
                    {"elbo", r.final_elbo},
                    {"relative_gap", r.relative_gap},
                    {"min_cosine", r.recovery.min_cosine},
                    {"recovered", r.recovery.recovered},
                    {"pairs_ranked", r.pairs_ok}});
  m["metrics"] = {{"ground_truth_loglik", result.ground_truth_loglik},
                  {"best_run", result.best},
                  {"verdict", ok ? "PASS" : "FAIL"},
                  {"runs", runs}};
  write_run_files(c, m);
  return kExitOk;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  if (!c.checkpoint.empty()) {
    require_file(c.checkpoint, "checkpoint");
    require_file(c.input, "input data");
    const TrainState s = restore_state(load_checkpoint(c.checkpoint));
    const Dataset data = read_csv_matrix(c.input);
    if (data.size() != s.sets.size() || data.dim() != s.theta.dim())
      throw InvalidInput("data '" + c.input + "' (" + std::to_string(data.size()) + "x" +
                         std::to_string(data.dim()) + ") does not match the checkpoint (" +
                         std::to_string(s.sets.size()) + "x" + std::to_string(s.theta.dim()) + ")");
    out << "epoch=" << s.epoch << "\n";
    out << "elbo=" << num(elbo(s.theta, data, s.sets, c.workers)) << "\n";
    out << "sigma2=" << num(s.theta.sigma2) << "\n";
    out << "pi_mean=" << num(pi_mean(s.theta)) << "\n";
    if (s.theta.num_latents() <= 16) out << "log_likelihood=" << num(exact_log_likelihood(s.theta, data)) << "\n";
  }
  if (!c.clean.empty() && c.input.size() > 4 && c.input.substr(c.input.size() - 4) == ".pgm") {
    require_file(c.input, "image");
    require_file(c.clean, "clean reference image");
    const Image a = read_pgm(c.input);
    const Image b = read_pgm(c.clean);
    out << "psnr=" << num(psnr(a, b)) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Truncated variational autoencoder: training, zero-shot denoising and inpainting", "tvae"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);

  Flags flags;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out_dir;
  const std::vector<std::pair<Task, const char*>> commands = {
      {Task::Train, "Train on a CSV data matrix"},
      {Task::Denoise, "Zero-shot denoising of a PGM image"},
      {Task::Inpaint, "Zero-shot inpainting of a PGM image"},
      {Task::BarsTest, "Ten seeded bars runs with recovery verdict"},
      {Task::Eval, "Evaluate a checkpoint on data or compare two images"},
  };
  std::vector<CLI::Option*> seed_opts, worker_opts, dir_opts;
  for (const auto& [task, help] : commands) {
    auto* sub = app.add_subcommand(to_string(task), help);
    sub->add_option("--config", flags.config, "INI configuration file")->check(CLI::ExistingFile);
    seed_opts.push_back(sub->add_option("--seed", seed, "Random seed"));
    worker_opts.push_back(sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber));
    dir_opts.push_back(sub->add_option("--out-dir", out_dir, "Output directory"));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Task task = Task::Train;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!app.got_subcommand(to_string(commands[i].first))) continue;
    task = commands[i].first;
    if (seed_opts[i]->count()) flags.seed = seed;
    if (worker_opts[i]->count()) flags.workers = workers;
    if (dir_opts[i]->count()) flags.out_dir = out_dir;
  }

  try {
    const RunConfig c = resolve(task, flags);
    switch (task) {
      case Task::Train: return cmd_train(c, out);
      case Task::Denoise: return cmd_denoise(c, out);
      case Task::Inpaint: return cmd_inpaint(c, out);
      case Task::BarsTest: return cmd_bars(c, out);
      case Task::Eval: return cmd_eval(c, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InvalidInput& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const TrainingDivergence& e) {
    err << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"tvae"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace tvae
