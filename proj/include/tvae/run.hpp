// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point.
//
//   tvae <train|denoise|inpaint|bars-test|eval> [--config FILE] [--seed N] [--workers N] [--out-dir DIR]
//
// The default worker count comes from TVAE_WORKERS when set. Settings are layered as
// defaults < config file < command-line flags.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tvae {

inline constexpr const char* kVersion = "1.0.0";

// Exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,     // unexpected error
  kExitUsage = 2,       // unknown flag or subcommand
  kExitConfig = 3,      // config parse or validation error
  kExitInput = 4,       // missing or malformed input file
  kExitDivergence = 5,  // training diverged
  kExitCheckpoint = 6,  // unreadable or incompatible checkpoint
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
// argv[0] is supplied internally.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvae
