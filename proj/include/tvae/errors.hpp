// SPDX-License-Identifier: Apache-2.0
//
// Exception types shared by all tvae modules.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tvae {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments with inconsistent shapes or out-of-domain values.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Non-finite gradients or bounds during training.
class TrainingDivergence : public Error {
 public:
  using Error::Error;
};

// Malformed external files (PGM, CSV, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormat : public ParseError {
 public:
  using ParseError::ParseError;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpoint : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class VersionMismatch : public CheckpointError {
 public:
  VersionMismatch(unsigned found, unsigned expected)
      : CheckpointError("checkpoint format version mismatch: file has version " + std::to_string(found) +
                        ", this build reads version " + std::to_string(expected)),
        found_(found),
        expected_(expected) {}

  unsigned found() const { return found_; }
  unsigned expected() const { return expected_; }

 private:
  unsigned found_;
  unsigned expected_;
};

// A configuration that violates one or more invariants. Every violation is kept.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  " + s;
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace tvae
