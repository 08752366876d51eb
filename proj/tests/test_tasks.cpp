// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tvae/bars_experiment.hpp"
#include "tvae/errors.hpp"
#include "tvae/tasks.hpp"

using namespace tvae;

TEST_CASE("posterior estimate of a single state is its mean") {
  std::mt19937_64 rng(1);
  const auto theta = oracle::random_model({4, 5, 6}, rng);
  const auto data = oracle::random_data(1, 6, rng);
  const auto z = BinaryLatentState::from_string("1001");
  const std::vector<BinaryLatentState> phi{z};
  CHECK(posterior_pixel_estimate(theta, data[0], phi) == oracle::forward(theta.net, z));
  CHECK_THROWS_AS(posterior_pixel_estimate(theta, data[0], std::vector<BinaryLatentState>{}), InvalidInput);
}

TEST_CASE("posterior estimate is a convex combination of the means") {
  std::mt19937_64 rng(2);
  const auto theta = oracle::random_model({5, 7}, rng, 0.3);
  const auto data = oracle::random_data(1, 7, rng);
  const auto phi = oracle::random_states(5, 6, rng);
  const auto est = posterior_pixel_estimate(theta, data[0], phi);
  for (std::size_t d = 0; d < 7; ++d) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& z : phi) {
      const double m = oracle::forward(theta.net, z)[d];
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    CHECK(est[d] >= lo - 1e-12);
    CHECK(est[d] <= hi + 1e-12);
  }
}

TEST_CASE("posterior estimate over the full space matches enumeration") {
  std::mt19937_64 rng(3);
  const auto theta = oracle::random_model({4, 3, 5}, rng, 0.5);
  const auto data = oracle::random_data(1, 5, rng);
  const auto all = oracle::all_states(4);
  const auto q = oracle::posterior(theta, data[0], all);
  std::vector<double> ref(5, 0.0);
  for (std::size_t k = 0; k < all.size(); ++k) {
    const auto mu = oracle::forward(theta.net, all[k]);
    for (std::size_t d = 0; d < 5; ++d) ref[d] += q[k] * mu[d];
  }
  const auto est = posterior_pixel_estimate(theta, data[0], all);
  for (std::size_t d = 0; d < 5; ++d) CHECK(std::abs(est[d] - ref[d]) <= 1e-12);

  auto shuffled = all;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  CHECK(posterior_pixel_estimate(theta, data[0], shuffled) == est);
}

TEST_CASE("psnr") {
  Image a(1, 2, 10.0);
  CHECK(std::isinf(psnr(a, a)));
  Image b = a;
  b.pixels[0] = 11.0;
  // mse 0.5 at peak 1
  CHECK(psnr(a, b, 1.0) == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
  Image c(2, 2, 0.0), d(2, 2, 50.0);
  CHECK(psnr(c, d) == doctest::Approx(20.0 * std::log10(255.0 / 50.0)));
  CHECK_THROWS_AS(psnr(a, c), InvalidInput);
}

namespace {

PatchTaskConfig tiny_task(int epochs) {
  PatchTaskConfig c;
  c.model.num_latents = 6;
  c.model.hidden_layers = {};
  c.model.sigma2_init = 1.0;
  c.train.epochs = epochs;
  c.train.batch_size = 16;
  c.train.schedule = LrSchedule::cyclic(0.01, 0.5, 10);
  c.train.ea.set_size = 8;
  c.train.ea.n_parents = 3;
  c.train.ea.n_children_per_parent = 2;
  c.train.seed = 4;
  c.patch_size = 4;
  c.stride = 2;
  c.mean_subtract = true;
  return c;
}

}  // namespace

TEST_CASE("checkerboard inpainting of a constant image is exact after rounding") {
  const Image img(12, 12, 100.0);
  const auto mask = checkerboard_mask(12, 12);
  Image corrupted = img;
  for (std::size_t i = 0; i < img.size(); ++i)
    if (!mask.observed[i]) corrupted.pixels[i] = 0.0;
  const auto r = inpaint(corrupted, mask, tiny_task(10), &img);
  CHECK(quantize(r.image) == img);
  for (std::size_t i = 0; i < img.size(); ++i)
    if (mask.observed[i]) CHECK(r.image.pixels[i] == corrupted.pixels[i]);
  CHECK(r.excluded_patches == 0);
  CHECK(std::isinf(*r.psnr_quantized));
}

TEST_CASE("inpainting fills uncoverable pixels with the observed mean") {
  Image img(4, 4, 50.0);
  PixelMask mask{4, 4, std::vector<std::uint8_t>(16, 1)};
  // The top-left 2x2 tile is fully missing.
  for (std::size_t i : {0, 1, 4, 5}) mask.observed[i] = 0;
  auto cfg = tiny_task(2);
  cfg.patch_size = 2;
  cfg.model.num_latents = 2;
  cfg.train.ea.set_size = 4;
  const auto r = inpaint(img, mask, cfg);
  CHECK(r.num_patches == 4);
  CHECK(r.excluded_patches == 1);
  CHECK(r.image.at(0, 0) == 50.0);
  PixelMask wrong{3, 3, std::vector<std::uint8_t>(9, 1)};
  CHECK_THROWS_AS(inpaint(img, wrong, cfg), InvalidInput);
}

TEST_CASE("small denoising run improves PSNR and is deterministic") {
  const Image clean = synthetic_scene(48, 48);
  const Image noisy = add_awgn(clean, 25.0, 2);
  PatchTaskConfig cfg;
  cfg.model.num_latents = 16;
  cfg.model.hidden_layers = {16};
  cfg.train.epochs = 30;
  cfg.train.schedule = LrSchedule::cyclic(0.01, 1.0, 10);
  cfg.train.ea.set_size = 16;
  cfg.train.ea.n_parents = 5;
  cfg.train.ea.n_children_per_parent = 4;
  cfg.train.seed = 3;
  cfg.patch_size = 6;
  cfg.mean_subtract = true;
  cfg.psnr_every = 10;
  const auto a = denoise(noisy, cfg, &clean);
  CHECK(*a.psnr > psnr(noisy, clean) + 1.5);
  CHECK(a.metrics.size() == 30);
  REQUIRE(a.psnr_trace.size() == 3);
  CHECK(a.psnr_trace.back().first == 29);
  CHECK(a.psnr_trace.back().second == *a.psnr);
  cfg.train.workers = 3;
  const auto b = denoise(noisy, cfg, &clean);
  CHECK(b.image == a.image);
  CHECK(b.theta == a.theta);
}

TEST_CASE("bar recovery scoring") {
  const auto g = gen_bars(4, 10, 0.01, 0.25, 1);
  ModelParams theta{DecoderNet({8, 16}), std::vector<double>(8, 0.25), 0.01};
  auto w = theta.net.weight(0);
  // Permuted, scaled bars are still recovered.
  for (std::size_t h = 0; h < 8; ++h)
    for (std::size_t d = 0; d < 16; ++d) w(d, h) = 2.0 * g.truth.bars[(h + 3) % 8][d];
  const auto rep = bar_recovery(theta, g.truth, 0.95);
  CHECK(rep.recovered);
  CHECK(rep.min_cosine == doctest::Approx(1.0));
  w(0, 0) = -5.0;
  w(1, 0) = 5.0;
  CHECK_FALSE(bar_recovery(theta, g.truth, 0.95).recovered);
}

TEST_CASE("discouraged pairs come from the inhibition matrix") {
  const auto spec = default_correlated_spec();
  const auto pairs = discouraged_pairs(spec);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(pairs[1] == std::pair<std::size_t, std::size_t>{6, 7});
}
