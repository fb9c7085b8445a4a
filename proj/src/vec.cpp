#include "sngm/vec.hpp"

#include <cmath>

#include "sngm/errors.hpp"

namespace sngm {

double euclidean_norm(const ParamVector& v) {
  double sum = 0.0;
  for (double c : v.coords) sum += c * c;
  if (sum > 0.0) return std::sqrt(sum);
  // Squares can underflow to zero for nonzero coords; rescale by the largest
  // magnitude so the norm is zero only for the zero vector.
  double max_abs = 0.0;
  for (double c : v.coords) max_abs = std::max(max_abs, std::abs(c));
  if (max_abs == 0.0) return 0.0;
  double scaled = 0.0;
  for (double c : v.coords) {
    const double r = c / max_abs;
    scaled += r * r;
  }
  return max_abs * std::sqrt(scaled);
}

double segment_norm(const ParamVector& v, std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += v.coords[i] * v.coords[i];
  return std::sqrt(sum);
}

ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y) {
  if (x.dim() != y.dim()) {
    throw ValidationError("axpy: dimension mismatch (" + std::to_string(x.dim()) +
                          " vs " + std::to_string(y.dim()) + ")");
  }
  ParamVector out = y;
  for (std::size_t i = 0; i < out.dim(); ++i) out.coords[i] += alpha * x.coords[i];
  return out;
}

void axpy_inplace(double alpha, const ParamVector& x, ParamVector& y) {
  if (x.dim() != y.dim()) {
    throw ValidationError("axpy: dimension mismatch (" + std::to_string(x.dim()) +
                          " vs " + std::to_string(y.dim()) + ")");
  }
  for (std::size_t i = 0; i < y.dim(); ++i) y.coords[i] += alpha * x.coords[i];
}

void scale_inplace(ParamVector& v, double alpha) {
  for (double& c : v.coords) c *= alpha;
}

double dot(const ParamVector& x, const ParamVector& y) {
  if (x.dim() != y.dim()) {
    throw ValidationError("dot: dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) sum += x.coords[i] * y.coords[i];
  return sum;
}

bool all_finite(const ParamVector& v) {
  for (double c : v.coords) {
    if (!std::isfinite(c)) return false;
  }
  return true;
}

void validate_layer_bounds(const ParamVector& v) {
  if (v.layer_bounds.empty()) return;
  std::size_t expected_begin = 0;
  for (const auto& [begin, end] : v.layer_bounds) {
    if (begin != expected_begin || end <= begin) {
      throw ValidationError("layer_bounds must be sorted, disjoint and cover the vector");
    }
    expected_begin = end;
  }
  if (expected_begin != v.dim()) {
    throw ValidationError("layer_bounds do not cover [0, " + std::to_string(v.dim()) + ")");
  }
}

}  // namespace sngm
