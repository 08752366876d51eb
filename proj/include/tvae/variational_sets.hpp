// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "tvae/binary_state.hpp"

namespace tvae {

// Phi(n) for every datapoint n: S pairwise distinct latent states each.
class VariationalSets {
 public:
  VariationalSets() = default;
  VariationalSets(std::size_t num_points, std::size_t set_size, std::size_t num_latents)
      : sets_(num_points), set_size_(set_size), num_latents_(num_latents) {}

  std::size_t size() const { return sets_.size(); }
  std::size_t set_size() const { return set_size_; }
  std::size_t num_latents() const { return num_latents_; }

  std::vector<BinaryLatentState>& operator[](std::size_t n) { return sets_[n]; }
  const std::vector<BinaryLatentState>& operator[](std::size_t n) const { return sets_[n]; }

  // True when every Phi(n) holds exactly S distinct states of length H.
  bool is_valid() const;

  friend bool operator==(const VariationalSets&, const VariationalSets&) = default;

 private:
  std::vector<std::vector<BinaryLatentState>> sets_;
  std::size_t set_size_ = 0;
  std::size_t num_latents_ = 0;
};

}  // namespace tvae
