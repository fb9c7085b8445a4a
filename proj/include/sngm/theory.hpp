#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sngm/problem.hpp"
#include "sngm/rng.hpp"
#include "sngm/vec.hpp"

namespace sngm {

enum class ParamSource { Known, Estimated };

// Constants entering the convergence bounds. `smoothness` is the gradient
// Lipschitz constant L, `grad_growth` the lambda of the relaxed inequality
// ||H(w)|| <= L + lambda * ||grad F(w)||, `sigma` the per-sample gradient
// deviation bound. Empirical estimates are lower bounds of the true
// constants and are labeled Estimated.
struct SmoothnessParams {
  double smoothness = 0.0;
  double grad_growth = 0.0;
  double sigma = 0.0;
  ParamSource source = ParamSource::Known;
};

// Momentum condition factor (1 + beta) / (1 - beta)^2; equals 1 at beta = 0
// and grows monotonically on [0, 1).
double kappa(double beta);

// A (batch size, learning rate, step count) prescription for a total budget
// of C per-sample gradient computations. steps == ceil(budget / batch).
struct BudgetPlan {
  std::uint64_t budget = 0;  // C
  std::uint64_t batch = 1;   // B
  std::uint64_t steps = 1;   // T
  double learning_rate = 0.0;
  std::optional<double> gap_estimate;      // F(w0) - F(w*) when known
  std::optional<double> guaranteed_bound;  // closed-form bound when available
};

// Gradient-norm statistics of a recorded trajectory.
struct StationarityReport {
  double avg_grad_norm = 0.0;     // (1/T) sum ||grad F(w_t)||
  double avg_sq_grad_norm = 0.0;  // (1/T) sum ||grad F(w_t)||^2
  double min_grad_norm = 0.0;
  double epsilon_achieved = 0.0;  // = min_grad_norm
  std::optional<double> bound_rhs;
};

// Largest per-sample gradient deviation observed over the evaluation points:
// max_w sqrt(mean_i ||grad f_i(w) - grad F(w)||^2). A lower estimate of the
// true sigma.
double estimate_sigma(const Problem& problem, const std::vector<ParamVector>& points);

// Empirical lower bound on the smoothness constant: the largest gradient
// difference ratio ||grad F(u) - grad F(w)|| / ||u - w|| over sampled pairs.
// Pairs alternate between independent draws from [-radius, radius]^d and
// short coordinate-aligned displacements, which pick up stiff axes.
double estimate_smoothness(const Problem& problem, SeededRng& rng, std::size_t trials,
                           double radius = 1.0);

struct HessianNormEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Spectral norm of the Hessian at w via power iteration on central-difference
// Hessian-vector products (eps = 1e-5, at most 50 iterations, 1e-8 residual).
HessianNormEstimate hessian_norm(const Problem& problem, const ParamVector& w,
                                 SeededRng& rng, double eps = 1e-5,
                                 int max_iterations = 50, double tol = 1e-8);

struct RelaxedFit {
  double smoothness = 0.0;   // L
  double grad_growth = 0.0;  // lambda
  bool all_converged = true;
  // (||grad F||, ||H||) pairs the fit was computed from.
  std::vector<std::pair<double, double>> samples;
};

// Fits the tightest line ||H|| <= L + lambda * ||grad F|| over points sampled
// from [-radius, radius]^d: lambda is the least-squares slope clamped to >= 0,
// L the smallest intercept that keeps every sample below the line.
RelaxedFit fit_relaxed_smoothness(const Problem& problem, SeededRng& rng,
                                  std::size_t points, double radius = 2.0);

// Checks the gradient-growth inequality implied by relaxed smoothness:
// ||grad F(u)|| <= (L * a + ||grad F(w)||) * exp(lambda * a) with a = ||u - w||,
// within an absolute slack of 1e-9.
bool check_grad_growth(const Problem& problem, const ParamVector& w,
                       const ParamVector& u, double smoothness, double grad_growth);

// Bound on the average SQUARED gradient norm (1/T) sum E||grad F(w_t)||^2 for
// the momentum method:
//   2(1-beta) * gap / (eta T) + L eta sigma^2 / ((1-beta)^2 B)
//     + 4 L^2 eta^2 sigma^2 / (1-beta)^2
// Valid only when eta <= (1-beta)^2 / ((1+beta) L); otherwise throws
// ValidationError ("msgd bound inapplicable").
double msgd_bound_rhs(const SmoothnessParams& params, double beta, double eta,
                      std::uint64_t batch, std::uint64_t steps, double gap);

// Batch-size cap floor(min(sqrt(C)/L, C^(1/4))) for the momentum method.
// The underlying analysis hides constants; with unit constants this is a
// scaling rule for trend comparisons, not a certified bound.
std::uint64_t msgd_max_batch(std::uint64_t budget, double smoothness);

enum class Regime { Smooth, Relaxed };

// Bound on the average UNSQUARED gradient norm (1/T) sum E||grad F(w_t)|| for
// the normalized momentum method:
//   smooth:  2(1-beta) * gap / (eta T) +   L kappa eta + 2 sigma / sqrt(B)
//   relaxed: 2(1-beta) * gap / (eta T) + 8 L kappa eta + 4 sigma / sqrt(B)
// The relaxed regime requires eta <= 1 / (8 kappa lambda).
double sngm_bound_rhs(const SmoothnessParams& params, double beta, double eta,
                      std::uint64_t batch, std::uint64_t steps, double gap,
                      Regime regime);

// Constants-aware plan minimizing the smooth-regime bound:
//   B = sqrt(C (1-beta) sigma^2 / (2 L (1+beta) gap)),
//   eta = sqrt(2 (1-beta)^3 gap B / ((1+beta) L C)),
// with the guaranteed bound 2 sqrt(2) * (8 L (1+beta) gap sigma^2 / ((1-beta) C))^(1/4).
BudgetPlan plan_corollary1(std::uint64_t budget, double beta,
                           const SmoothnessParams& params, double gap);

// Constants-free plan: B = round(sqrt(C)), eta = sqrt(B / C).
BudgetPlan plan_corollary2(std::uint64_t budget);

// Relaxed-regime plan: B = round(sqrt(C)), eta = C^(-1/4), feasible only when
// eta <= 1 / (8 kappa lambda); otherwise throws PlanInfeasibleError carrying
// the minimal admissible budget (8 kappa lambda)^4.
BudgetPlan plan_corollary3(std::uint64_t budget, double beta, double grad_growth);

// Full-batch gradient norms along a recorded trajectory.
StationarityReport stationarity(const Problem& problem,
                                const std::vector<ParamVector>& trajectory);

}  // namespace sngm
