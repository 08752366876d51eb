// SPDX-License-Identifier: Apache-2.0
//
// Fully connected decoder mu(z; W) with backpropagation of a weighted squared error.
// All parameters live in one flat buffer: for each layer l the (out x in) weight
// matrix in row-major order, followed by its bias vector.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tvae/binary_state.hpp"
#include "tvae/linalg.hpp"

namespace tvae {

enum class Activation { Identity, ReLU };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

class DecoderNet {
 public:
  DecoderNet() = default;
  // All parameters start at zero. layer_dims = {H, M1, ..., D}, at least two entries, all >= 1.
  explicit DecoderNet(std::vector<std::size_t> layer_dims, Activation hidden = Activation::ReLU,
                      Activation output = Activation::Identity);

  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  std::size_t num_layers() const { return dims_.size() - 1; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  Activation activation(std::size_t layer) const { return layer + 1 == num_layers() ? output_ : hidden_; }

  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + dims_[layer + 1] * dims_[layer]; }

  MatrixView<double> weight(std::size_t layer);
  ConstMatrixView weight(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  friend bool operator==(const DecoderNet&, const DecoderNet&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  Activation hidden_ = Activation::ReLU;
  Activation output_ = Activation::Identity;
};

// Per-layer pre-activations and activations of the most recent forward pass.
// activations[0] is the input, activations[L] the output mean.
struct ForwardCache {
  std::vector<std::vector<double>> preactivations;
  std::vector<std::vector<double>> activations;
  std::vector<std::size_t> active_inputs;
};

// Computes mu(input; W). Zero inputs are skipped in the first layer, which makes
// binary inputs cheap. Throws InvalidInput if input.size() != net.input_dim().
std::span<const double> forward(const DecoderNet& net, std::span<const double> input, ForwardCache& cache);
std::span<const double> forward(const DecoderNet& net, const BinaryLatentState& z, ForwardCache& cache);
std::vector<double> forward(const DecoderNet& net, const BinaryLatentState& z);

// Adds weight * d/dW sum_{d observed} (x_d - mu_d)^2 to `grad`, using the activations left in
// `cache` by the preceding forward() call. `mask` empty means every dimension is observed.
void accumulate_mse_gradient(const DecoderNet& net, std::span<const double> x, std::span<const std::uint8_t> mask,
                             double weight, const ForwardCache& cache, std::span<double> grad);

// Gradient of sum_i weights[i] * ||x - mu(states[i])||^2 over observed dimensions.
// weights must sum to one (1e-9); states must be non-empty and match weights in length.
std::vector<double> backward_weighted_mse(const DecoderNet& net, std::span<const double> x,
                                          std::span<const BinaryLatentState> states, std::span<const double> weights,
                                          std::span<const std::uint8_t> mask = {});

// Xavier/Glorot uniform weights in +-sqrt(6/(fan_in+fan_out)); zero biases.
DecoderNet init_net(std::vector<std::size_t> layer_dims, std::uint64_t seed, Activation hidden = Activation::ReLU);

// Turns a one-layer net {H, D} into {H, H, ..., D} with `extra_layers` identity H x H layers
// in front of the original map. For non-negative inputs and ReLU hidden units the output is unchanged.
DecoderNet expand_with_identity_layers(const DecoderNet& linear, std::size_t extra_layers);

}  // namespace tvae
