// SPDX-License-Identifier: Apache-2.0

#include "tvae/decoder_net.hpp"

#include <cmath>
#include <random>

#include "tvae/errors.hpp"

namespace tvae {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity:
      return "identity";
    case Activation::ReLU:
      return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "identity" || s == "linear") return Activation::Identity;
  throw InvalidInput("unknown activation '" + s + "' (expected relu or identity)");
}

DecoderNet::DecoderNet(std::vector<std::size_t> layer_dims, Activation hidden, Activation output)
    : dims_(std::move(layer_dims)), hidden_(hidden), output_(output) {
  if (dims_.size() < 2) throw InvalidInput("decoder needs at least an input and an output dimension");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    if (dims_[l] == 0 || dims_[l + 1] == 0) throw InvalidInput("decoder layer dimensions must be >= 1");
    offsets_.push_back(total);
    total += dims_[l + 1] * dims_[l] + dims_[l + 1];
  }
  params_.assign(total, 0.0);
}

MatrixView<double> DecoderNet::weight(std::size_t layer) {
  return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
}

ConstMatrixView DecoderNet::weight(std::size_t layer) const {
  return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
}

std::span<double> DecoderNet::bias(std::size_t layer) {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}

std::span<const double> DecoderNet::bias(std::size_t layer) const {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}

namespace {

void apply_activation(Activation a, std::span<const double> pre, std::span<double> out) {
  switch (a) {
    case Activation::Identity:
      for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i];
      break;
    case Activation::ReLU:
      for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
      break;
  }
}

void prepare(const DecoderNet& net, ForwardCache& cache) {
  const auto& dims = net.layer_dims();
  if (cache.activations.size() != dims.size()) {
    cache.activations.resize(dims.size());
    cache.preactivations.resize(dims.size() - 1);
  }
  for (std::size_t l = 0; l < dims.size(); ++l) cache.activations[l].resize(dims[l]);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) cache.preactivations[l].resize(dims[l + 1]);
}

void run_layers(const DecoderNet& net, ForwardCache& cache) {
  // First layer: only the non-zero inputs contribute.
  const auto& in = cache.activations[0];
  cache.active_inputs.clear();
  for (std::size_t j = 0; j < in.size(); ++j) {
    if (in[j] != 0.0) cache.active_inputs.push_back(j);
  }
  {
    const auto w = net.weight(0);
    const auto b = net.bias(0);
    auto& pre = cache.preactivations[0];
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double* r = w.data() + i * w.cols();
      double acc = b[i];
      for (std::size_t j : cache.active_inputs) acc += r[j] * in[j];
      pre[i] = acc;
    }
    apply_activation(net.activation(0), pre, cache.activations[1]);
  }
  for (std::size_t l = 1; l < net.num_layers(); ++l) {
    gemv_bias(net.weight(l), cache.activations[l], net.bias(l), cache.preactivations[l]);
    apply_activation(net.activation(l), cache.preactivations[l], cache.activations[l + 1]);
  }
}

}  // namespace

std::span<const double> forward(const DecoderNet& net, std::span<const double> input, ForwardCache& cache) {
  if (input.size() != net.input_dim()) {
    throw InvalidInput("decoder input has length " + std::to_string(input.size()) + ", expected " +
                       std::to_string(net.input_dim()));
  }
  prepare(net, cache);
  std::copy(input.begin(), input.end(), cache.activations[0].begin());
  run_layers(net, cache);
  return cache.activations.back();
}

std::span<const double> forward(const DecoderNet& net, const BinaryLatentState& z, ForwardCache& cache) {
  if (z.size() != net.input_dim()) {
    throw InvalidInput("latent state has length " + std::to_string(z.size()) + ", decoder expects " +
                       std::to_string(net.input_dim()));
  }
  prepare(net, cache);
  z.to_input(cache.activations[0]);
  run_layers(net, cache);
  return cache.activations.back();
}

std::vector<double> forward(const DecoderNet& net, const BinaryLatentState& z) {
  ForwardCache cache;
  auto out = forward(net, z, cache);
  return {out.begin(), out.end()};
}

void accumulate_mse_gradient(const DecoderNet& net, std::span<const double> x, std::span<const std::uint8_t> mask,
                             double weight, const ForwardCache& cache, std::span<double> grad) {
  const std::size_t L = net.num_layers();
  const auto& out = cache.activations[L];
  if (x.size() != out.size()) throw InvalidInput("observation length does not match decoder output");
  if (!mask.empty() && mask.size() != x.size()) throw InvalidInput("mask length does not match observation");
  if (grad.size() != net.num_params()) throw InvalidInput("gradient buffer has wrong size");

  // delta = dLoss/dpre for the current layer.
  std::vector<double> delta(out.size());
  for (std::size_t d = 0; d < out.size(); ++d) {
    const bool observed = mask.empty() || mask[d] != 0;
    delta[d] = observed ? -2.0 * weight * (x[d] - out[d]) : 0.0;
  }
  std::vector<double> upstream;
  for (std::size_t l = L; l-- > 0;) {
    const auto& pre = cache.preactivations[l];
    if (net.activation(l) == Activation::ReLU) {
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(pre[i] > 0.0)) delta[i] = 0.0;
      }
    }
    const std::size_t rows = net.layer_dims()[l + 1];
    const std::size_t cols = net.layer_dims()[l];
    MatrixView<double> gw(grad.data() + net.weight_offset(l), rows, cols);
    double* gb = grad.data() + net.bias_offset(l);
    const auto& in = cache.activations[l];
    if (l == 0) {
      for (std::size_t i = 0; i < rows; ++i) {
        if (delta[i] == 0.0) continue;
        double* r = gw.data() + i * cols;
        for (std::size_t j : cache.active_inputs) r[j] += delta[i] * in[j];
      }
    } else {
      ger(gw, delta, in);
    }
    for (std::size_t i = 0; i < rows; ++i) gb[i] += delta[i];
    if (l > 0) {
      upstream.resize(cols);
      gemv_transposed(net.weight(l), delta, upstream);
      delta.swap(upstream);
    }
  }
}

std::vector<double> backward_weighted_mse(const DecoderNet& net, std::span<const double> x,
                                          std::span<const BinaryLatentState> states, std::span<const double> weights,
                                          std::span<const std::uint8_t> mask) {
  if (states.empty()) throw InvalidInput("backward_weighted_mse: empty state list");
  if (states.size() != weights.size()) throw InvalidInput("backward_weighted_mse: states and weights differ in length");
  double total = 0.0;
  for (double w : weights) total += w;
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("backward_weighted_mse: weights must sum to one");
  if (x.size() != net.output_dim()) throw InvalidInput("backward_weighted_mse: observation length mismatch");

  std::vector<double> grad(net.num_params(), 0.0);
  ForwardCache cache;
  for (std::size_t i = 0; i < states.size(); ++i) {
    forward(net, states[i], cache);
    accumulate_mse_gradient(net, x, mask, weights[i], cache, grad);
  }
  return grad;
}

DecoderNet init_net(std::vector<std::size_t> layer_dims, std::uint64_t seed, Activation hidden) {
  DecoderNet net(std::move(layer_dims), hidden, Activation::Identity);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto w = net.weight(l);
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
  }
  return net;
}

DecoderNet expand_with_identity_layers(const DecoderNet& linear, std::size_t extra_layers) {
  if (linear.num_layers() != 1) throw InvalidInput("expand_with_identity_layers expects a one-layer decoder");
  const std::size_t H = linear.input_dim();
  std::vector<std::size_t> dims(extra_layers + 1, H);
  dims.push_back(linear.output_dim());
  DecoderNet net(dims, Activation::ReLU, linear.output_activation());
  for (std::size_t l = 0; l < extra_layers; ++l) {
    auto w = net.weight(l);
    for (std::size_t i = 0; i < H; ++i) w(i, i) = 1.0;
  }
  const std::size_t last = net.num_layers() - 1;
  auto src = linear.params();
  std::copy(src.begin(), src.end(), net.params().begin() + static_cast<std::ptrdiff_t>(net.weight_offset(last)));
  return net;
}

}  // namespace tvae
