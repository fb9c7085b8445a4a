#pragma once

#include <cstdint>
#include <variant>
#include <vector>

namespace sngm {

// Learning-rate schedules, all evaluated at an integer step t in [0, T).

struct ConstantLr {
  double base = 0.1;
};

// base * (1 - t/T)^power. Defined for t < total_steps only.
struct PolyLr {
  double base = 0.1;
  std::uint64_t total_steps = 1;
  double power = 1.0;
};

// base * factor^(number of milestones <= t). Milestones are step indices.
struct StepLr {
  double base = 0.1;
  std::vector<std::uint64_t> milestones;
  double factor = 0.1;
};

using PlainSchedule = std::variant<ConstantLr, PolyLr, StepLr>;

// Linear ramp from `from` to the inner schedule's base over `steps` steps,
// then the inner schedule evaluated at the global step.
struct WarmupLr {
  double from = 0.1;
  std::uint64_t steps = 1;
  PlainSchedule inner;
};

using LrSchedule = std::variant<ConstantLr, PolyLr, StepLr, WarmupLr>;

double lr_at(const LrSchedule& schedule, std::uint64_t t);

}  // namespace sngm
