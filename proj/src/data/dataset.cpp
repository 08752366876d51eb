// SPDX-License-Identifier: Apache-2.0

#include "tvae/dataset.hpp"

#include <charconv>
#include <fstream>
#include <string>

#include "tvae/errors.hpp"

namespace tvae {

std::size_t ObservationView::observed_count() const {
  if (observed.empty()) return values.size();
  std::size_t c = 0;
  for (auto m : observed) c += m != 0;
  return c;
}

Observation::Observation(std::vector<double> v, std::vector<std::uint8_t> mask)
    : values(std::move(v)), observed(std::move(mask)) {
  if (!observed.empty() && observed.size() != values.size()) {
    throw InvalidInput("observation mask length differs from value length");
  }
  if (view().observed_count() == 0) throw InvalidInput("observation has no observed entries");
}

Dataset::Dataset(std::size_t num_points, std::size_t dim) : n_(num_points), d_(dim), values_(num_points * dim, 0.0) {}

Dataset::Dataset(std::size_t num_points, std::size_t dim, std::vector<double> values, std::vector<std::uint8_t> observed)
    : n_(num_points), d_(dim), values_(std::move(values)), observed_(std::move(observed)) {
  if (values_.size() != n_ * d_) throw InvalidInput("dataset value buffer does not match N x D");
  if (!observed_.empty() && observed_.size() != n_ * d_) throw InvalidInput("dataset mask does not match N x D");
}

ObservationView Dataset::operator[](std::size_t n) const {
  std::span<const std::uint8_t> mask;
  if (!observed_.empty()) mask = {observed_.data() + n * d_, d_};
  return {{values_.data() + n * d_, d_}, mask};
}

std::size_t Dataset::total_observed() const {
  if (observed_.empty()) return n_ * d_;
  std::size_t c = 0;
  for (auto m : observed_) c += m != 0;
  return c;
}

Dataset read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file: " + path.string());
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t cols = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed number in column " +
                         std::to_string(cols + 1));
      }
      values.push_back(v);
      ++cols;
      p = next;
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      if (*p != ',') throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected ','");
      ++p;
    }
    if (rows == 0) dim = cols;
    if (cols != dim) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": row has " + std::to_string(cols) +
                       " columns, expected " + std::to_string(dim));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("CSV file contains no rows: " + path.string());
  return Dataset(rows, dim, std::move(values));
}

void write_csv_matrix(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write CSV file: " + path.string());
  char buf[64];
  for (std::size_t n = 0; n < data.size(); ++n) {
    auto row = data.values(n);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d) out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, row[d]);
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

}  // namespace tvae
