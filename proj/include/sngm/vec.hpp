#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace sngm {

// Flat parameter vector. layer_bounds, when non-empty, is a sorted list of
// half-open [begin, end) ranges that partition [0, dim()) exactly; layer-wise
// methods (LARS) require it, everything else ignores it.
struct ParamVector {
  std::vector<double> coords;
  std::vector<std::pair<std::size_t, std::size_t>> layer_bounds;

  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : coords(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : coords(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : coords(values) {}

  std::size_t dim() const { return coords.size(); }
  bool has_layers() const { return !layer_bounds.empty(); }
  double& operator[](std::size_t i) { return coords[i]; }
  double operator[](std::size_t i) const { return coords[i]; }
};

double euclidean_norm(const ParamVector& v);

// Norm over coords[begin, end).
double segment_norm(const ParamVector& v, std::size_t begin, std::size_t end);

// Returns alpha*x + y. Inputs are left untouched. Throws ValidationError on
// dimension mismatch. The result carries y's layer_bounds.
ParamVector axpy(double alpha, const ParamVector& x, const ParamVector& y);

// y += alpha*x, in place.
void axpy_inplace(double alpha, const ParamVector& x, ParamVector& y);

void scale_inplace(ParamVector& v, double alpha);

double dot(const ParamVector& x, const ParamVector& y);

bool all_finite(const ParamVector& v);

// Throws ValidationError unless layer_bounds is empty or is sorted, disjoint
// and covers [0, dim()) exactly.
void validate_layer_bounds(const ParamVector& v);

}  // namespace sngm
