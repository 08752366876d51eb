// SPDX-License-Identifier: Apache-2.0
//
// Versioned binary checkpoint container.
//
//   "TVAECKPT" | u32 format_version | u32 field_count |
//   field_count x ( u16 name_len | name | u8 type | u64 payload_len | payload ) |
//   u64 FNV-1a of every preceding byte
//
// All integers and doubles are little endian. Types: 1 = f64 array, 2 = u64 array, 3 = bytes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tvae/trainer.hpp"

namespace tvae {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
  std::uint32_t format_version = kCheckpointFormatVersion;
  ModelParams theta;
  VariationalSets sets;
  AdamState adam;
  int epoch = 0;
  std::string rng_state;
  std::string config_digest;
  std::size_t pending_hidden_layers = 0;
};

Checkpoint make_checkpoint(const TrainState& state, const std::string& config_digest);
TrainState restore_state(const Checkpoint& ck);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
// Throws CorruptCheckpoint for truncated or damaged files and VersionMismatch for other versions.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tvae
