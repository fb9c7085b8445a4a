#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sngm/schedule.hpp"
#include "sngm/vec.hpp"

namespace sngm {

enum class Method { Sngm, Msgd, Sngd, Lars };

std::string method_name(Method method);
Method parse_method(const std::string& name);

struct OptimizerOptions {
  Method method = Method::Sngm;
  double beta = 0.9;
  double weight_decay = 0.0;
  // SNGM only: add weight decay to the gradient before normalizing (default)
  // or add it to the normalized direction afterwards. The momentum-norm bound
  // below is guaranteed only in the before-norm configuration.
  bool decay_before_norm = true;
  // LARS only.
  double trust = 0.001;
  double lars_epsilon = 1e-9;
  LrSchedule schedule = ConstantLr{0.1};
};

// Upper bound on the momentum norm maintained by the normalized methods:
// accumulating unit vectors with factor beta keeps ||u_t|| within the
// geometric-series limit 1/(1 - beta).
double momentum_norm_limit(double beta);

// Gradients whose norm falls at or below this threshold contribute no
// normalized direction: the momentum simply decays for that step.
inline constexpr double kZeroGradientThreshold = 1e-30;

// Sequential update-rule engine. A single instance owns its momentum buffer
// and step counter; steps are inherently ordered, so instances are never
// shared across threads. Independent instances may run concurrently.
class Optimizer {
 public:
  Optimizer(OptimizerOptions options, std::size_t dim);

  // Applies one update at the current step count t using lr(t), advances t.
  // g is the raw mini-batch gradient; weight decay is applied internally.
  // Throws DivergenceError if g or the updated iterate is non-finite.
  void step(ParamVector& w, const ParamVector& g);

  const OptimizerOptions& options() const { return options_; }
  std::uint64_t step_count() const { return t_; }
  const ParamVector& momentum() const { return momentum_; }
  double momentum_norm() const;
  double last_lr() const { return last_lr_; }

 private:
  void step_msgd(ParamVector& w, const ParamVector& g, double lr);
  void step_sngm(ParamVector& w, const ParamVector& g, double lr);
  void step_lars(ParamVector& w, const ParamVector& g, double lr);

  OptimizerOptions options_;
  ParamVector momentum_;
  std::uint64_t t_ = 0;
  double last_lr_ = 0.0;
};

// Micro-batch gradient accumulator. Feed micro-batch mean gradients of a
// fixed micro-batch size m; once target_batch/m of them have arrived, add()
// returns their mean (the exact size-B batch mean over the underlying
// samples) and resets.
class GradAccumulator {
 public:
  GradAccumulator(std::size_t micro_batch, std::size_t target_batch, std::size_t dim);

  std::optional<ParamVector> add(const ParamVector& micro_mean);

  std::size_t pending() const { return count_; }
  std::size_t micro_batch() const { return micro_batch_; }
  std::size_t target_batch() const { return target_batch_; }

 private:
  std::size_t micro_batch_ = 1;
  std::size_t target_batch_ = 1;
  std::size_t chunks_ = 1;
  std::size_t count_ = 0;
  ParamVector sum_;
};

}  // namespace sngm
