// SPDX-License-Identifier: Apache-2.0

#include "tvae/tasks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "tvae/errors.hpp"
#include "tvae/parallel.hpp"

namespace tvae {

std::vector<double> posterior_pixel_estimate(JointEvaluator& eval, ObservationView x,
                                             std::span<const BinaryLatentState> phi) {
  if (phi.empty()) throw InvalidInput("posterior_pixel_estimate: empty state set");
  std::vector<std::size_t> order(phi.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return phi[a] < phi[b]; });

  std::vector<double> log_joints(phi.size());
  for (std::size_t k = 0; k < order.size(); ++k) log_joints[k] = eval.log_joint(x, phi[order[k]]);
  const auto q = q_weights_from_log_joints(log_joints);

  std::vector<double> est(eval.theta().dim(), 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto mu = eval.mean(phi[order[k]]);
    for (std::size_t d = 0; d < est.size(); ++d) est[d] += q[k] * mu[d];
  }
  return est;
}

std::vector<double> posterior_pixel_estimate(const ModelParams& theta, ObservationView x,
                                             std::span<const BinaryLatentState> phi) {
  JointEvaluator eval(theta);
  return posterior_pixel_estimate(eval, x, phi);
}

double psnr(const Image& a, const Image& b, double peak) {
  if (a.height != b.height || a.width != b.width || a.pixels.size() != b.pixels.size())
    throw InvalidInput("psnr: images differ in shape");
  if (a.pixels.empty()) throw InvalidInput("psnr: empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) sse += (a.pixels[i] - b.pixels[i]) * (a.pixels[i] - b.pixels[i]);
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.pixels.size());
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

struct Prepared {
  PatchSet patches;
  std::vector<double> means;            // per patch, zeros without mean subtraction
  std::vector<std::size_t> trainable;   // patch indices with at least one observed pixel
  Dataset train_data;
};

Prepared prepare(const Image& image, const PixelMask* mask, const PatchTaskConfig& cfg) {
  Prepared p{extract_patches(image, cfg.patch_size, cfg.patch_size, cfg.stride, mask), {}, {}, {}};
  Dataset& all = p.patches.data;
  p.means = cfg.mean_subtract ? subtract_patch_means(all) : std::vector<double>(all.size(), 0.0);
  for (std::size_t n = 0; n < all.size(); ++n)
    if (all[n].observed_count() > 0) p.trainable.push_back(n);
  if (p.trainable.empty()) throw InvalidInput("no patch has an observed pixel");
  if (p.trainable.size() == all.size()) {
    p.train_data = all;
  } else {
    const std::size_t D = all.dim();
    std::vector<double> values(p.trainable.size() * D);
    std::vector<std::uint8_t> observed(p.trainable.size() * D);
    for (std::size_t i = 0; i < p.trainable.size(); ++i) {
      const auto src = all[p.trainable[i]];
      for (std::size_t d = 0; d < D; ++d) {
        values[i * D + d] = src.values[d];
        observed[i * D + d] = src.is_observed(d) ? 1 : 0;
      }
    }
    p.train_data = Dataset(p.trainable.size(), D, std::move(values), std::move(observed));
  }
  return p;
}

// Estimates for all trainable patches merged into an image. Uncovered pixels are NaN.
Image reconstruct(const Prepared& p, const ModelParams& theta, const VariationalSets& sets, unsigned workers) {
  const std::size_t P = p.patches.grid.num_patches();
  const std::size_t D = p.patches.grid.patch_dim();
  std::vector<double> estimates(P * D, 0.0);
  std::vector<JointEvaluator> evals(std::max(1U, workers), JointEvaluator(theta));
  parallel_for(p.trainable.size(), workers, [&](std::size_t i, unsigned w) {
    const auto est = posterior_pixel_estimate(evals[w], p.train_data[i], sets[i]);
    const std::size_t n = p.trainable[i];
    for (std::size_t d = 0; d < D; ++d) estimates[n * D + d] = est[d] + p.means[n];
  });
  MergeOptions opts;
  if (p.trainable.size() != P) {
    opts.include = std::vector<bool>(P, false);
    for (auto n : p.trainable) (*opts.include)[n] = true;
  }
  return merge_patches(estimates, p.patches.grid, opts);
}

void compose(Image& out, const Image& input, const PixelMask* mask) {
  if (!mask) return;
  double fill = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < input.pixels.size(); ++i) {
    if (!mask->observed[i]) continue;
    fill += input.pixels[i];
    ++k;
  }
  fill = k ? fill / static_cast<double>(k) : 0.0;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (mask->observed[i])
      out.pixels[i] = input.pixels[i];
    else if (std::isnan(out.pixels[i]))
      out.pixels[i] = fill;
  }
}

DenoiseResult run_pipeline(const Image& image, const PixelMask* mask, const PatchTaskConfig& cfg, const Image* clean,
                           const FitOptions& fit_options) {
  if (clean && (clean->height != image.height || clean->width != image.width))
    throw InvalidInput("clean reference differs in shape from the input image");
  if (cfg.psnr_every < 0) throw InvalidInput("psnr_every must be >= 0");
  const auto t0 = std::chrono::steady_clock::now();
  const Prepared p = prepare(image, mask, cfg);

  DenoiseResult result;
  FitOptions opts = fit_options;
  if (clean && cfg.psnr_every > 0) {
    opts.on_epoch = [&, user = fit_options.on_epoch](const EpochMetrics& m, const TrainState& s) {
      if (user) user(m, s);
      if ((m.epoch + 1) % cfg.psnr_every != 0) return;
      Image est = reconstruct(p, s.theta, s.sets, cfg.train.workers);
      compose(est, image, mask);
      result.psnr_trace.emplace_back(m.epoch, psnr(est, *clean));
    };
  }
  FitResult fitted = fit(p.train_data, cfg.model, cfg.train, opts);

  result.image = reconstruct(p, fitted.state.theta, fitted.state.sets, cfg.train.workers);
  compose(result.image, image, mask);
  for (double& v : result.image.pixels)
    if (std::isnan(v)) v = 0.0;  // only reachable without a mask, where every pixel is covered
  if (clean) {
    result.psnr = psnr(result.image, *clean);
    result.psnr_quantized = psnr(quantize(result.image), *clean);
  }
  result.metrics = std::move(fitted.metrics);
  result.theta = std::move(fitted.state.theta);
  result.num_patches = p.patches.grid.num_patches();
  result.excluded_patches = result.num_patches - p.trainable.size();
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace

DenoiseResult denoise(const Image& noisy, const PatchTaskConfig& config, const Image* clean,
                      const FitOptions& fit_options) {
  return run_pipeline(noisy, nullptr, config, clean, fit_options);
}

DenoiseResult inpaint(const Image& image, const PixelMask& mask, const PatchTaskConfig& config, const Image* clean,
                      const FitOptions& fit_options) {
  if (mask.height != image.height || mask.width != image.width || mask.observed.size() != image.pixels.size())
    throw InvalidInput("inpaint: mask shape does not match the image");
  return run_pipeline(image, &mask, config, clean, fit_options);
}

}  // namespace tvae
