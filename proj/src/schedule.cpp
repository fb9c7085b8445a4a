#include "sngm/schedule.hpp"

#include <cmath>

#include "sngm/errors.hpp"

namespace sngm {

namespace {

double poly_lr(const PolyLr& p, std::uint64_t t) {
  if (t >= p.total_steps) {
    throw ValidationError("poly schedule evaluated at t = " + std::to_string(t) +
                          " >= total_steps = " + std::to_string(p.total_steps));
  }
  const double frac = 1.0 - static_cast<double>(t) / static_cast<double>(p.total_steps);
  return p.base * std::pow(frac, p.power);
}

double step_lr(const StepLr& s, std::uint64_t t) {
  std::size_t hits = 0;
  for (std::uint64_t m : s.milestones) {
    if (m <= t) ++hits;
  }
  return s.base * std::pow(s.factor, static_cast<double>(hits));
}

double plain_lr_at(const PlainSchedule& schedule, std::uint64_t t) {
  if (const auto* c = std::get_if<ConstantLr>(&schedule)) return c->base;
  if (const auto* p = std::get_if<PolyLr>(&schedule)) return poly_lr(*p, t);
  return step_lr(std::get<StepLr>(schedule), t);
}

double plain_base(const PlainSchedule& schedule) {
  if (const auto* c = std::get_if<ConstantLr>(&schedule)) return c->base;
  if (const auto* p = std::get_if<PolyLr>(&schedule)) return p->base;
  return std::get<StepLr>(schedule).base;
}

}  // namespace

double lr_at(const LrSchedule& schedule, std::uint64_t t) {
  if (const auto* w = std::get_if<WarmupLr>(&schedule)) {
    if (t < w->steps) {
      const double target = plain_base(w->inner);
      const double frac = static_cast<double>(t) / static_cast<double>(w->steps);
      return w->from + (target - w->from) * frac;
    }
    return plain_lr_at(w->inner, t);
  }
  if (const auto* c = std::get_if<ConstantLr>(&schedule)) return c->base;
  if (const auto* p = std::get_if<PolyLr>(&schedule)) return poly_lr(*p, t);
  return step_lr(std::get<StepLr>(schedule), t);
}

}  // namespace sngm
