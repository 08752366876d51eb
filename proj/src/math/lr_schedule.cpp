// SPDX-License-Identifier: Apache-2.0

#include "tvae/lr_schedule.hpp"

#include <algorithm>
#include <cmath>

#include "tvae/errors.hpp"

namespace tvae {

std::string to_string(LrScheduleKind k) {
  switch (k) {
    case LrScheduleKind::CyclicTriangular:
      return "cyclic";
    case LrScheduleKind::Constant:
      return "constant";
    case LrScheduleKind::ExponentialDecay:
      return "exponential";
  }
  return "unknown";
}

LrScheduleKind lr_schedule_kind_from_string(const std::string& s) {
  if (s == "cyclic") return LrScheduleKind::CyclicTriangular;
  if (s == "constant") return LrScheduleKind::Constant;
  if (s == "exponential") return LrScheduleKind::ExponentialDecay;
  throw InvalidInput("unknown learning-rate schedule '" + s + "' (expected cyclic, constant or exponential)");
}

void LrSchedule::validate() const {
  if (!(min_lr >= 0.0) || !(max_lr >= min_lr)) throw InvalidInput("learning rates must satisfy 0 <= min_lr <= max_lr");
  if (epochs_per_cycle < 1) throw InvalidInput("epochs_per_cycle must be >= 1");
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidInput("lr decay must lie in (0, 1]");
}

double lr_at(const LrSchedule& s, int epoch) {
  if (epoch < 0) throw InvalidInput("lr_at: negative epoch");
  switch (s.kind) {
    case LrScheduleKind::Constant:
      return s.max_lr;
    case LrScheduleKind::ExponentialDecay:
      return std::max(s.min_lr, s.max_lr * std::pow(s.decay, epoch));
    case LrScheduleKind::CyclicTriangular: {
      const double period = s.epochs_per_cycle;
      const double half = period / 2.0;
      const double pos = static_cast<double>(epoch % s.epochs_per_cycle);
      const double frac = pos <= half ? pos / half : (period - pos) / half;
      return std::clamp(s.min_lr + (s.max_lr - s.min_lr) * frac, s.min_lr, s.max_lr);
    }
  }
  return s.max_lr;
}

}  // namespace tvae
