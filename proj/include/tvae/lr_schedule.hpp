// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace tvae {

enum class LrScheduleKind { CyclicTriangular, Constant, ExponentialDecay };

std::string to_string(LrScheduleKind k);
LrScheduleKind lr_schedule_kind_from_string(const std::string& s);

// Learning-rate schedule over epochs.
//  - cyclic: triangle wave starting at min_lr, peaking at max_lr half way through each cycle
//  - constant: max_lr throughout
//  - exponential: max_lr * decay^epoch, never below min_lr
struct LrSchedule {
  LrScheduleKind kind = LrScheduleKind::CyclicTriangular;
  double min_lr = 1e-4;
  double max_lr = 1e-2;
  int epochs_per_cycle = 20;
  double decay = 0.97;

  static LrSchedule constant(double lr) { return {LrScheduleKind::Constant, lr, lr, 1, 1.0}; }
  static LrSchedule cyclic(double min_lr, double max_lr, int epochs_per_cycle) {
    return {LrScheduleKind::CyclicTriangular, min_lr, max_lr, epochs_per_cycle, 1.0};
  }

  // Throws InvalidInput unless 0 <= min_lr <= max_lr, epochs_per_cycle >= 1 and 0 < decay <= 1.
  void validate() const;
};

double lr_at(const LrSchedule& schedule, int epoch);

}  // namespace tvae
