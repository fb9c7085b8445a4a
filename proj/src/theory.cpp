#include "sngm/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sngm/errors.hpp"

namespace sngm {

double kappa(double beta) {
  if (beta < 0.0 || beta >= 1.0) throw ValidationError("kappa: beta must lie in [0, 1)");
  return (1.0 + beta) / ((1.0 - beta) * (1.0 - beta));
}

double estimate_sigma(const Problem& problem, const std::vector<ParamVector>& points) {
  if (points.empty()) throw ValidationError("estimate_sigma: need >= 1 point");
  const std::size_t n = problem.sample_count();
  double worst = 0.0;
  for (const auto& w : points) {
    const ParamVector mean = problem.full_gradient(w);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const ParamVector gi = problem.sample_gradient(i, w);
      for (std::size_t j = 0; j < gi.dim(); ++j) {
        const double dv = gi.coords[j] - mean.coords[j];
        acc += dv * dv;
      }
    }
    worst = std::max(worst, std::sqrt(acc / static_cast<double>(n)));
  }
  return worst;
}

double estimate_smoothness(const Problem& problem, SeededRng& rng, std::size_t trials,
                           double radius) {
  if (trials == 0) throw ValidationError("estimate_smoothness: trials must be >= 1");
  const std::size_t d = problem.dimension();
  double best = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    ParamVector w(d);
    for (double& c : w.coords) c = rng.next_in(-radius, radius);
    ParamVector u = w;
    if (trial % 2 == 0) {
      // Short displacement along one axis.
      const std::size_t axis = (trial / 2) % d;
      u.coords[axis] += 1e-3 * radius;
    } else {
      for (double& c : u.coords) c = rng.next_in(-radius, radius);
    }
    const ParamVector gw = problem.full_gradient(w);
    const ParamVector gu = problem.full_gradient(u);
    const double dist = euclidean_norm(axpy(-1.0, w, u));
    if (dist < 1e-12) continue;
    const double diff = euclidean_norm(axpy(-1.0, gw, gu));
    best = std::max(best, diff / dist);
  }
  return best;
}

HessianNormEstimate hessian_norm(const Problem& problem, const ParamVector& w,
                                 SeededRng& rng, double eps, int max_iterations,
                                 double tol) {
  const std::size_t d = problem.dimension();
  ParamVector v(d);
  for (double& c : v.coords) c = rng.next_in(-1.0, 1.0);
  double norm = euclidean_norm(v);
  if (norm == 0.0) v.coords[0] = 1.0, norm = 1.0;
  scale_inplace(v, 1.0 / norm);

  HessianNormEstimate est;
  for (int it = 0; it < max_iterations; ++it) {
    est.iterations = it + 1;
    // Central-difference Hessian-vector product.
    ParamVector plus = axpy(eps, v, w);
    ParamVector minus = axpy(-eps, v, w);
    ParamVector hv = axpy(-1.0, problem.full_gradient(minus), problem.full_gradient(plus));
    scale_inplace(hv, 1.0 / (2.0 * eps));

    const double lam = euclidean_norm(hv);
    est.value = lam;
    if (lam < 1e-14) {
      // Locally flat: the norm is zero as far as finite differences can tell.
      est.converged = true;
      return est;
    }
    scale_inplace(hv, 1.0 / lam);
    const double delta_same = euclidean_norm(axpy(-1.0, v, hv));
    const double delta_flip = euclidean_norm(axpy(1.0, v, hv));
    v = hv;
    if (std::min(delta_same, delta_flip) <= tol) {
      est.converged = true;
      return est;
    }
  }
  return est;
}

RelaxedFit fit_relaxed_smoothness(const Problem& problem, SeededRng& rng,
                                  std::size_t points, double radius) {
  if (points < 2) throw ValidationError("fit_relaxed_smoothness: need >= 2 points");
  if (!problem.twice_differentiable()) {
    throw ValidationError("fit_relaxed_smoothness: problem is not twice differentiable");
  }
  const std::size_t d = problem.dimension();

  RelaxedFit fit;
  fit.samples.reserve(points);
  for (std::size_t k = 0; k < points; ++k) {
    ParamVector w(d);
    for (double& c : w.coords) c = rng.next_in(-radius, radius);
    const double grad = euclidean_norm(problem.full_gradient(w));
    const HessianNormEstimate h = hessian_norm(problem, w, rng);
    if (!h.converged) fit.all_converged = false;
    fit.samples.emplace_back(grad, h.value);
  }

  // Least-squares slope over (||grad||, ||H||), clamped to >= 0; then the
  // smallest intercept that keeps every sample on or below the line.
  double mean_g = 0.0, mean_h = 0.0;
  for (const auto& [g, h] : fit.samples) {
    mean_g += g;
    mean_h += h;
  }
  mean_g /= static_cast<double>(fit.samples.size());
  mean_h /= static_cast<double>(fit.samples.size());
  double cov = 0.0, var = 0.0;
  for (const auto& [g, h] : fit.samples) {
    cov += (g - mean_g) * (h - mean_h);
    var += (g - mean_g) * (g - mean_g);
  }
  fit.grad_growth = var > 0.0 ? std::max(0.0, cov / var) : 0.0;

  double intercept = 0.0;
  for (const auto& [g, h] : fit.samples) {
    intercept = std::max(intercept, h - fit.grad_growth * g);
  }
  fit.smoothness = intercept;
  return fit;
}

bool check_grad_growth(const Problem& problem, const ParamVector& w,
                       const ParamVector& u, double smoothness, double grad_growth) {
  const double alpha = euclidean_norm(axpy(-1.0, w, u));
  const double grad_w = euclidean_norm(problem.full_gradient(w));
  const double grad_u = euclidean_norm(problem.full_gradient(u));
  return grad_u <= (smoothness * alpha + grad_w) * std::exp(grad_growth * alpha) + 1e-9;
}

double msgd_bound_rhs(const SmoothnessParams& params, double beta, double eta,
                      std::uint64_t batch, std::uint64_t steps, double gap) {
  if (beta < 0.0 || beta >= 1.0) throw ValidationError("msgd_bound_rhs: beta in [0, 1)");
  if (eta <= 0.0 || batch == 0 || steps == 0) {
    throw ValidationError("msgd_bound_rhs: eta, batch and steps must be positive");
  }
  const double L = params.smoothness;
  const double one_minus = 1.0 - beta;
  const double limit = one_minus * one_minus / ((1.0 + beta) * L);
  if (L > 0.0 && eta > limit) {
    throw ValidationError("msgd bound inapplicable: eta = " + std::to_string(eta) +
                          " exceeds (1-beta)^2/((1+beta)L) = " + std::to_string(limit));
  }
  const double sigma2 = params.sigma * params.sigma;
  const double term1 = 2.0 * one_minus * gap / (eta * static_cast<double>(steps));
  const double term2 =
      L * eta * sigma2 / (one_minus * one_minus * static_cast<double>(batch));
  const double term3 = 4.0 * L * L * eta * eta * sigma2 / (one_minus * one_minus);
  return term1 + term2 + term3;
}

std::uint64_t msgd_max_batch(std::uint64_t budget, double smoothness) {
  if (budget == 0) throw ValidationError("msgd_max_batch: budget must be >= 1");
  if (!(smoothness > 0.0)) throw ValidationError("msgd_max_batch: L must be > 0");
  const double c = static_cast<double>(budget);
  const double cap = std::min(std::sqrt(c) / smoothness, std::sqrt(std::sqrt(c)));
  return static_cast<std::uint64_t>(std::floor(cap));
}

double sngm_bound_rhs(const SmoothnessParams& params, double beta, double eta,
                      std::uint64_t batch, std::uint64_t steps, double gap,
                      Regime regime) {
  if (beta < 0.0 || beta >= 1.0) throw ValidationError("sngm_bound_rhs: beta in [0, 1)");
  if (eta <= 0.0 || batch == 0 || steps == 0) {
    throw ValidationError("sngm_bound_rhs: eta, batch and steps must be positive");
  }
  const double k = kappa(beta);
  if (regime == Regime::Relaxed) {
    const double limit = 1.0 / (8.0 * k * params.grad_growth);
    if (params.grad_growth > 0.0 && eta > limit) {
      throw ValidationError("relaxed-regime bound inapplicable: eta = " +
                            std::to_string(eta) + " exceeds 1/(8 kappa lambda) = " +
                            std::to_string(limit));
    }
  }
  const double term1 = 2.0 * (1.0 - beta) * gap / (eta * static_cast<double>(steps));
  const double noise = params.sigma / std::sqrt(static_cast<double>(batch));
  if (regime == Regime::Smooth) {
    return term1 + params.smoothness * k * eta + 2.0 * noise;
  }
  return term1 + 8.0 * params.smoothness * k * eta + 4.0 * noise;
}

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::uint64_t round_batch(double value) {
  const auto rounded = static_cast<std::uint64_t>(std::llround(value));
  return std::max<std::uint64_t>(1, rounded);
}

}  // namespace

BudgetPlan plan_corollary1(std::uint64_t budget, double beta,
                           const SmoothnessParams& params, double gap) {
  if (budget == 0) throw ValidationError("plan: budget must be >= 1");
  if (!(gap > 0.0)) throw ValidationError("plan: gap must be positive");
  if (!(params.sigma > 0.0)) throw ValidationError("plan: sigma must be positive");
  if (!(params.smoothness > 0.0)) throw ValidationError("plan: L must be positive");
  if (beta < 0.0 || beta >= 1.0) throw ValidationError("plan: beta in [0, 1)");

  const double c = static_cast<double>(budget);
  const double L = params.smoothness;
  const double sigma2 = params.sigma * params.sigma;
  const double raw_batch =
      std::sqrt(c * (1.0 - beta) * sigma2 / (2.0 * L * (1.0 + beta) * gap));

  BudgetPlan plan;
  plan.budget = budget;
  plan.batch = round_batch(raw_batch);
  plan.steps = ceil_div(budget, plan.batch);
  const double b = static_cast<double>(plan.batch);
  plan.learning_rate = std::sqrt(2.0 * std::pow(1.0 - beta, 3) * gap * b /
                                 ((1.0 + beta) * L * c));
  plan.gap_estimate = gap;
  plan.guaranteed_bound =
      2.0 * std::sqrt(2.0) *
      std::sqrt(std::sqrt(8.0 * L * (1.0 + beta) * gap * sigma2 / ((1.0 - beta) * c)));
  return plan;
}

BudgetPlan plan_corollary2(std::uint64_t budget) {
  if (budget == 0) throw ValidationError("plan: budget must be >= 1");
  const double c = static_cast<double>(budget);
  BudgetPlan plan;
  plan.budget = budget;
  plan.batch = round_batch(std::sqrt(c));
  plan.steps = ceil_div(budget, plan.batch);
  plan.learning_rate = std::sqrt(static_cast<double>(plan.batch) / c);
  return plan;
}

BudgetPlan plan_corollary3(std::uint64_t budget, double beta, double grad_growth) {
  if (budget == 0) throw ValidationError("plan: budget must be >= 1");
  if (!(grad_growth > 0.0)) throw ValidationError("plan: lambda must be positive");
  const double c = static_cast<double>(budget);
  const double eta = 1.0 / std::sqrt(std::sqrt(c));
  const double k = kappa(beta);
  const double limit = 1.0 / (8.0 * k * grad_growth);
  if (eta > limit) {
    const double min_budget = std::pow(8.0 * k * grad_growth, 4);
    throw PlanInfeasibleError(
        "budget too small for lambda = " + std::to_string(grad_growth) + ", beta = " +
            std::to_string(beta) + ": needs C >= " + std::to_string(min_budget),
        min_budget);
  }
  BudgetPlan plan;
  plan.budget = budget;
  plan.batch = round_batch(std::sqrt(c));
  plan.steps = ceil_div(budget, plan.batch);
  plan.learning_rate = eta;
  return plan;
}

StationarityReport stationarity(const Problem& problem,
                                const std::vector<ParamVector>& trajectory) {
  if (trajectory.empty()) throw ValidationError("stationarity: empty trajectory");
  StationarityReport report;
  report.min_grad_norm = std::numeric_limits<double>::infinity();
  for (const auto& w : trajectory) {
    const double g = euclidean_norm(problem.full_gradient(w));
    report.avg_grad_norm += g;
    report.avg_sq_grad_norm += g * g;
    report.min_grad_norm = std::min(report.min_grad_norm, g);
  }
  const auto count = static_cast<double>(trajectory.size());
  report.avg_grad_norm /= count;
  report.avg_sq_grad_norm /= count;
  report.epsilon_achieved = report.min_grad_norm;
  return report;
}

}  // namespace sngm
