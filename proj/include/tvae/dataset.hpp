// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tvae {

// One datapoint x with its observed/missing mask. An empty mask means fully observed.
struct ObservationView {
  std::span<const double> values;
  std::span<const std::uint8_t> observed;

  std::size_t size() const { return values.size(); }
  bool is_observed(std::size_t d) const { return observed.empty() || observed[d] != 0; }
  std::size_t observed_count() const;
};

// Owning counterpart of ObservationView.
struct Observation {
  std::vector<double> values;
  std::vector<std::uint8_t> observed;

  explicit Observation(std::vector<double> v, std::vector<std::uint8_t> mask = {});
  ObservationView view() const { return {values, observed}; }
  operator ObservationView() const { return view(); }
};

// N x D row-major observations with an optional per-entry mask (1 = observed).
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t num_points, std::size_t dim);
  Dataset(std::size_t num_points, std::size_t dim, std::vector<double> values, std::vector<std::uint8_t> observed = {});

  std::size_t size() const { return n_; }
  std::size_t dim() const { return d_; }
  bool has_mask() const { return !observed_.empty(); }

  ObservationView operator[](std::size_t n) const;
  std::span<double> values(std::size_t n) { return {values_.data() + n * d_, d_}; }
  std::span<const double> values(std::size_t n) const { return {values_.data() + n * d_, d_}; }

  const std::vector<double>& raw_values() const { return values_; }
  const std::vector<std::uint8_t>& raw_mask() const { return observed_; }

  std::size_t total_observed() const;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> observed_;
};

// CSV float matrices: one row per datapoint, comma separated, '.' decimal point, no header.
// Values are written with shortest round-trip formatting.
Dataset read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Dataset& data);

}  // namespace tvae
