// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvae {

// A point z in {0,1}^H. Ordered lexicographically by bit index 0..H-1.
class BinaryLatentState {
 public:
  BinaryLatentState() = default;
  explicit BinaryLatentState(std::size_t num_bits) : bits_(num_bits, 0) {}
  // Throws InvalidInput if any entry is not 0 or 1.
  explicit BinaryLatentState(std::vector<std::uint8_t> bits);

  // "0110" -> bits (0,1,1,0).
  static BinaryLatentState from_string(std::string_view s);
  static BinaryLatentState from_index(std::uint64_t index, std::size_t num_bits);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t h) const { return bits_[h] != 0; }
  void set(std::size_t h, bool value) { bits_[h] = value ? 1 : 0; }
  void flip(std::size_t h) { bits_[h] ^= 1; }
  std::size_t count() const;

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::string to_string() const;

  // Writes z as 0.0 / 1.0 into `out`.
  void to_input(std::span<double> out) const;

  friend auto operator<=>(const BinaryLatentState&, const BinaryLatentState&) = default;
  friend bool operator==(const BinaryLatentState&, const BinaryLatentState&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct BinaryLatentStateHash {
  std::size_t operator()(const BinaryLatentState& z) const noexcept;
};

std::size_t hamming_distance(const BinaryLatentState& a, const BinaryLatentState& b);

}  // namespace tvae
