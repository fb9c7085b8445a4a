#include "sngm/optimizer.hpp"

#include <cassert>
#include <cmath>

#include "sngm/errors.hpp"

namespace sngm {

std::string method_name(Method method) {
  switch (method) {
    case Method::Sngm: return "sngm";
    case Method::Msgd: return "msgd";
    case Method::Sngd: return "sngd";
    case Method::Lars: return "lars";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "sngm") return Method::Sngm;
  if (name == "msgd") return Method::Msgd;
  if (name == "sngd") return Method::Sngd;
  if (name == "lars") return Method::Lars;
  throw ValidationError("unknown method '" + name + "' (expected sngm|msgd|sngd|lars)");
}

double momentum_norm_limit(double beta) { return 1.0 / (1.0 - beta); }

Optimizer::Optimizer(OptimizerOptions options, std::size_t dim)
    : options_(std::move(options)), momentum_(dim) {
  if (options_.beta < 0.0 || options_.beta >= 1.0) {
    throw ValidationError("beta must lie in [0, 1)");
  }
  if (options_.weight_decay < 0.0) {
    throw ValidationError("weight_decay must be >= 0");
  }
  if (options_.method == Method::Sngd) {
    options_.beta = 0.0;  // plain normalized steps by definition
  }
}

double Optimizer::momentum_norm() const { return euclidean_norm(momentum_); }

void Optimizer::step(ParamVector& w, const ParamVector& g) {
  if (w.dim() != momentum_.dim() || g.dim() != momentum_.dim()) {
    throw ValidationError("optimizer step: dimension mismatch");
  }
  if (!all_finite(g)) {
    throw DivergenceError("non-finite gradient at step " + std::to_string(t_), t_);
  }
  const double lr = lr_at(options_.schedule, t_);
  last_lr_ = lr;

  switch (options_.method) {
    case Method::Msgd:
      step_msgd(w, g, lr);
      break;
    case Method::Sngm:
    case Method::Sngd:
      step_sngm(w, g, lr);
      break;
    case Method::Lars:
      step_lars(w, g, lr);
      break;
  }

  if (!all_finite(w)) {
    throw DivergenceError("non-finite iterate after step " + std::to_string(t_), t_);
  }
  ++t_;
}

void Optimizer::step_msgd(ParamVector& w, const ParamVector& g, double lr) {
  const double wd = options_.weight_decay;
  for (std::size_t i = 0; i < w.dim(); ++i) {
    const double eff = g.coords[i] + wd * w.coords[i];
    momentum_.coords[i] = options_.beta * momentum_.coords[i] + eff;
    w.coords[i] -= lr * momentum_.coords[i];
  }
}

void Optimizer::step_sngm(ParamVector& w, const ParamVector& g, double lr) {
  const double wd = options_.weight_decay;
  const bool before = options_.decay_before_norm;
  const bool decay_joins = wd > 0.0 && before;

  auto effective = [&](std::size_t i) {
    return decay_joins ? g.coords[i] + wd * w.coords[i] : g.coords[i];
  };

  // Normalize through the largest magnitude so squares can neither overflow
  // nor underflow; arbitrarily scaled gradients keep their direction.
  double max_abs = 0.0;
  for (std::size_t i = 0; i < w.dim(); ++i) {
    max_abs = std::max(max_abs, std::abs(effective(i)));
  }
  double scaled_norm = 0.0;
  if (max_abs > 0.0) {
    for (std::size_t i = 0; i < w.dim(); ++i) {
      const double r = effective(i) / max_abs;
      scaled_norm += r * r;
    }
    scaled_norm = std::sqrt(scaled_norm);
  }

  // A vanishing gradient contributes no direction; the momentum decays.
  const bool vanishing = max_abs * scaled_norm <= kZeroGradientThreshold;

  for (std::size_t i = 0; i < w.dim(); ++i) {
    double dir = 0.0;
    if (!vanishing) dir = effective(i) / max_abs / scaled_norm;
    if (wd > 0.0 && !before) dir += wd * w.coords[i];
    momentum_.coords[i] = options_.beta * momentum_.coords[i] + dir;
  }
  for (std::size_t i = 0; i < w.dim(); ++i) {
    w.coords[i] -= lr * momentum_.coords[i];
  }
#ifndef NDEBUG
  if (!(wd > 0.0 && !before)) {
    assert(momentum_norm() <= momentum_norm_limit(options_.beta) + 1e-9);
  }
#endif
}

void Optimizer::step_lars(ParamVector& w, const ParamVector& g, double lr) {
  if (!w.has_layers()) {
    throw ValidationError("lars requires layer_bounds on the parameter vector");
  }
  validate_layer_bounds(w);
  const double wd = options_.weight_decay;

  for (const auto& [begin, end] : w.layer_bounds) {
    const double w_norm = segment_norm(w, begin, end);
    const double g_norm = segment_norm(g, begin, end);
    const double local_lr =
        options_.trust * w_norm / (g_norm + wd * w_norm + options_.lars_epsilon);
    for (std::size_t i = begin; i < end; ++i) {
      const double eff = g.coords[i] + wd * w.coords[i];
      momentum_.coords[i] = options_.beta * momentum_.coords[i] + local_lr * eff;
      w.coords[i] -= lr * momentum_.coords[i];
    }
  }
}

GradAccumulator::GradAccumulator(std::size_t micro_batch, std::size_t target_batch,
                                 std::size_t dim)
    : micro_batch_(micro_batch), target_batch_(target_batch), sum_(dim) {
  if (micro_batch == 0 || target_batch == 0) {
    throw ValidationError("accumulator: batch sizes must be >= 1");
  }
  if (target_batch % micro_batch != 0) {
    throw ValidationError("accumulator: micro batch " + std::to_string(micro_batch) +
                          " does not divide target batch " + std::to_string(target_batch));
  }
  chunks_ = target_batch / micro_batch;
}

std::optional<ParamVector> GradAccumulator::add(const ParamVector& micro_mean) {
  if (micro_mean.dim() != sum_.dim()) {
    throw ValidationError("accumulator: dimension mismatch");
  }
  axpy_inplace(1.0, micro_mean, sum_);
  ++count_;
  if (count_ < chunks_) return std::nullopt;

  ParamVector mean = sum_;
  scale_inplace(mean, 1.0 / static_cast<double>(chunks_));
  sum_ = ParamVector(sum_.dim());
  count_ = 0;
  return mean;
}

}  // namespace sngm
