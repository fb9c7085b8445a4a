#pragma once

// Shared test utilities. The finite-difference machinery here is the
// independent oracle for every analytic gradient in the library; it only
// calls loss evaluation, never the gradient code it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "sngm/dataset.hpp"
#include "sngm/problem.hpp"
#include "sngm/rng.hpp"
#include "sngm/vec.hpp"

namespace sngm::testing {

inline double fd_directional(const Problem& problem, const ParamVector& w,
                             const ParamVector& dir, double eps = 1e-5) {
  const double plus = problem.full_loss(axpy(eps, dir, w));
  const double minus = problem.full_loss(axpy(-eps, dir, w));
  return (plus - minus) / (2.0 * eps);
}

struct GradCheckResult {
  double worst_rel_error = 0.0;
  std::size_t points_checked = 0;
};

// Central-difference check of the analytic gradient at `points` random
// locations. Nonsmooth kinks (relu) can defeat any finite-difference stencil;
// when allow_resample is set, a failing point is redrawn a few times before
// it counts.
inline GradCheckResult gradient_check(const Problem& problem, SeededRng& rng,
                                      std::size_t points, double tol,
                                      bool allow_resample = false,
                                      double point_scale = 1.0) {
  GradCheckResult result;
  const std::size_t d = problem.dimension();
  for (std::size_t p = 0; p < points; ++p) {
    double rel = 0.0;
    int attempts = allow_resample ? 5 : 1;
    while (attempts-- > 0) {
      ParamVector w(d);
      for (double& c : w.coords) c = rng.next_in(-point_scale, point_scale);
      ParamVector dir(d);
      for (double& c : dir.coords) c = rng.next_in(-1.0, 1.0);
      const double norm = euclidean_norm(dir);
      if (norm == 0.0) continue;
      scale_inplace(dir, 1.0 / norm);

      const double analytic = dot(problem.full_gradient(w), dir);
      const double numeric = fd_directional(problem, w, dir);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      rel = std::abs(analytic - numeric) / denom;
      if (rel <= tol) break;
    }
    result.worst_rel_error = std::max(result.worst_rel_error, rel);
    ++result.points_checked;
  }
  return result;
}

// Mean of per-sample gradients must equal the full gradient essentially
// exactly; both run the same accumulation, so this guards the averaging.
inline double full_vs_mean_gradient_error(const Problem& problem, const ParamVector& w) {
  const ParamVector full = problem.full_gradient(w);
  ParamVector mean(problem.dimension());
  for (std::size_t i = 0; i < problem.sample_count(); ++i) {
    problem.add_sample_gradient(i, w, mean);
  }
  scale_inplace(mean, 1.0 / static_cast<double>(problem.sample_count()));
  const double scale = std::max(1.0, euclidean_norm(full));
  return euclidean_norm(axpy(-1.0, full, mean)) / scale;
}

inline DatasetMatrix random_binary_dataset(std::size_t rows, std::size_t cols,
                                           SeededRng& rng, double feature_scale = 1.0) {
  DatasetMatrix data;
  data.rows = rows;
  data.cols = cols;
  data.features.resize(rows * cols);
  data.labels.resize(rows);
  for (auto& f : data.features) f = rng.next_in(-feature_scale, feature_scale);
  for (auto& label : data.labels) label = rng.next_below(2) ? 1.0 : 0.0;
  return data;
}

}  // namespace sngm::testing
