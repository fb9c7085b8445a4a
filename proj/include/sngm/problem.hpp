#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sngm/dataset.hpp"
#include "sngm/rng.hpp"
#include "sngm/vec.hpp"

namespace sngm {

struct EvalMetrics {
  double loss = 0.0;
  std::optional<double> accuracy;
};

// Finite-sum objective F(w) = (1/n) sum_i f_i(w) with per-sample loss and
// gradient access. Per-sample gradients are first class: variance estimation
// needs them. All evaluators are pure and safe to call concurrently.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t sample_count() const = 0;
  virtual std::size_t dimension() const = 0;

  virtual double sample_loss(std::size_t i, const ParamVector& w) const = 0;
  // acc += grad f_i(w)
  virtual void add_sample_gradient(std::size_t i, const ParamVector& w,
                                   ParamVector& acc) const = 0;

  ParamVector sample_gradient(std::size_t i, const ParamVector& w) const;

  double full_loss(const ParamVector& w) const;
  ParamVector full_gradient(const ParamVector& w) const;

  // Mean over an explicit index multiset (repeats allowed).
  double batch_loss(const ParamVector& w, std::span<const std::size_t> indices) const;
  ParamVector batch_gradient(const ParamVector& w,
                             std::span<const std::size_t> indices) const;

  // Starting point for optimization runs. Deterministic for a fixed rng
  // stream; problems with closed-form starting points ignore the rng.
  virtual ParamVector initial_point(SeededRng& rng) const;

  // [begin, end) parameter ranges for layer-wise methods; empty when the
  // problem has no layer structure.
  virtual std::vector<std::pair<std::size_t, std::size_t>> layer_ranges() const {
    return {};
  }

  // Known constants, when the construction provides them.
  virtual std::optional<double> known_smoothness() const { return std::nullopt; }
  virtual bool smoothness_is_upper_bound() const { return false; }
  // Exact (L, lambda) pair bounding the Hessian norm by L + lambda*||grad F||.
  virtual std::optional<std::pair<double, double>> known_relaxed_pair() const {
    return std::nullopt;
  }
  virtual std::optional<double> optimal_value() const { return std::nullopt; }
  virtual std::optional<ParamVector> minimizer() const { return std::nullopt; }
  virtual bool twice_differentiable() const { return true; }

  // Loss/accuracy on an external dataset (holdout evaluation). Problems
  // without a data-driven loss return nullopt.
  virtual std::optional<EvalMetrics> evaluate_dataset(const ParamVector& w,
                                                      const DatasetMatrix& data) const {
    (void)w;
    (void)data;
    return std::nullopt;
  }
};

// Mean of n convex quadratics (1/2)(w - c_i)^T A (w - c_i) with A diagonal.
// The minimizer is the center mean, the minimum value and the smoothness
// constant max(spectrum) are exact.
std::unique_ptr<Problem> make_quadratic(const std::vector<double>& spectrum,
                                        const std::vector<ParamVector>& centers,
                                        double start_offset = 1.0);

// Convenience overload drawing n centers uniformly from
// [-center_scale, center_scale]^d.
std::unique_ptr<Problem> make_quadratic(const std::vector<double>& spectrum,
                                        std::size_t n, SeededRng& rng,
                                        double center_scale = 0.25,
                                        double start_offset = 1.0);

// Binary logistic regression, labels in {0, 1}, optional L2 term folded into
// every per-sample loss. The reported smoothness constant
// max_i ||x_i||^2 / 4 + l2 is an upper bound and is flagged as such.
std::unique_ptr<Problem> make_logistic(const DatasetMatrix& data, double l2 = 0.0);

// One-dimensional f(w) = exp(a*w). Its Hessian equals a * gradient
// everywhere, so it satisfies the relaxed smoothness inequality tightly with
// (L, lambda) = (0, a) and is not L-smooth on R for any finite L.
std::unique_ptr<Problem> make_exp_family(double a, double start_point = 0.0);

enum class Activation { Tanh, Relu };

// Fully connected MLP with hand-written backpropagation. layout.front() must
// equal the feature dimension; layout.back() == 1 trains binary cross-entropy
// on {0, 1} labels, layout.back() == k > 1 trains softmax cross-entropy on
// integer labels in [0, k). Parameters pack per layer as the weight matrix
// (row-major, out x in) followed by the bias vector, and layer_ranges()
// exposes one range per matrix and one per bias. relu'(0) is defined as 0.
std::unique_ptr<Problem> make_mlp(const std::vector<std::size_t>& layout,
                                  Activation activation, const DatasetMatrix& data);

}  // namespace sngm
