// SPDX-License-Identifier: Apache-2.0

#include "tvae/binary_state.hpp"

#include <algorithm>
#include <numeric>

#include "tvae/errors.hpp"

namespace tvae {

BinaryLatentState::BinaryLatentState(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw InvalidInput("binary latent state entries must be 0 or 1");
  }
}

BinaryLatentState BinaryLatentState::from_string(std::string_view s) {
  std::vector<std::uint8_t> bits;
  bits.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw InvalidInput("binary latent state string may only contain '0' and '1'");
    bits.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return BinaryLatentState(std::move(bits));
}

BinaryLatentState BinaryLatentState::from_index(std::uint64_t index, std::size_t num_bits) {
  if (num_bits > 64) throw InvalidInput("from_index supports at most 64 bits");
  BinaryLatentState z(num_bits);
  for (std::size_t h = 0; h < num_bits; ++h) z.set(h, (index >> h) & 1U);
  return z;
}

std::size_t BinaryLatentState::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string BinaryLatentState::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t h = 0; h < bits_.size(); ++h) s[h] = bits_[h] ? '1' : '0';
  return s;
}

void BinaryLatentState::to_input(std::span<double> out) const {
  if (out.size() != bits_.size()) throw InvalidInput("to_input: output length differs from state length");
  for (std::size_t h = 0; h < bits_.size(); ++h) out[h] = bits_[h] ? 1.0 : 0.0;
}

std::size_t BinaryLatentStateHash::operator()(const BinaryLatentState& z) const noexcept {
  // FNV-1a over the bit bytes.
  std::uint64_t hash = 14695981039346656037ULL;
  for (auto b : z.bits()) {
    hash ^= b;
    hash *= 1099511628211ULL;
  }
  hash ^= z.size();
  hash *= 1099511628211ULL;
  return static_cast<std::size_t>(hash);
}

std::size_t hamming_distance(const BinaryLatentState& a, const BinaryLatentState& b) {
  if (a.size() != b.size()) throw InvalidInput("hamming_distance: length mismatch");
  std::size_t d = 0;
  for (std::size_t h = 0; h < a.size(); ++h) d += a[h] != b[h];
  return d;
}

}  // namespace tvae
