#include <doctest.h>

#include <cmath>

#include "sngm/errors.hpp"
#include "sngm/rng.hpp"
#include "sngm/vec.hpp"

using namespace sngm;

TEST_CASE("euclidean norm basics") {
  CHECK(euclidean_norm(ParamVector({3.0, 4.0})) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(euclidean_norm(ParamVector(17)) == 0.0);

  ParamVector ones(1000, 1.0);
  CHECK(euclidean_norm(ones) ==
        doctest::Approx(std::sqrt(1000.0)).epsilon(1e-12));
  // norm is zero iff the vector is zero
  ParamVector tiny(3);
  tiny.coords[1] = 1e-300;
  CHECK(euclidean_norm(tiny) > 0.0);
}

TEST_CASE("axpy basics") {
  const ParamVector x({1.0, 2.0});
  const ParamVector y({3.0, 4.0});
  const ParamVector r = axpy(1.0, x, y);
  CHECK(r.coords[0] == 4.0);
  CHECK(r.coords[1] == 6.0);
  // inputs untouched
  CHECK(x.coords[0] == 1.0);
  CHECK(y.coords[0] == 3.0);

  const ParamVector id = axpy(0.0, x, y);
  CHECK(id.coords[0] == y.coords[0]);
  CHECK(id.coords[1] == y.coords[1]);

  const ParamVector m = axpy(-2.0, ParamVector({1.0, 0.0}), ParamVector({0.0, 1.0}));
  CHECK(m.coords[0] == -2.0);
  CHECK(m.coords[1] == 1.0);

  CHECK_THROWS_AS(axpy(1.0, ParamVector(2), ParamVector(3)), ValidationError);
}

TEST_CASE("axpy composition property") {
  SeededRng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = rng.next_in(-1e3, 1e3);
    const double b = rng.next_in(-1e3, 1e3);
    ParamVector x(8), y(8);
    for (double& c : x.coords) c = rng.next_in(-10.0, 10.0);
    for (double& c : y.coords) c = rng.next_in(-10.0, 10.0);

    const ParamVector lhs = axpy(a, x, axpy(b, x, y));
    const ParamVector rhs = axpy(a + b, x, y);
    for (std::size_t i = 0; i < 8; ++i) {
      const double scale = std::max({1.0, std::abs(lhs.coords[i]), std::abs(rhs.coords[i])});
      CHECK(std::abs(lhs.coords[i] - rhs.coords[i]) / scale <= 1e-12);
    }
  }
}

TEST_CASE("self-cancellation is exact") {
  SeededRng rng(12);
  ParamVector x(32);
  for (double& c : x.coords) c = rng.next_in(-100.0, 100.0);
  CHECK(euclidean_norm(axpy(-1.0, x, x)) == 0.0);
}

TEST_CASE("layer bound validation") {
  ParamVector w(10);
  CHECK_NOTHROW(validate_layer_bounds(w));  // unsegmented is fine

  w.layer_bounds = {{0, 4}, {4, 10}};
  CHECK_NOTHROW(validate_layer_bounds(w));

  w.layer_bounds = {{0, 4}, {5, 10}};  // gap
  CHECK_THROWS_AS(validate_layer_bounds(w), ValidationError);

  w.layer_bounds = {{0, 4}, {4, 9}};  // does not cover
  CHECK_THROWS_AS(validate_layer_bounds(w), ValidationError);

  w.layer_bounds = {{4, 10}, {0, 4}};  // unsorted
  CHECK_THROWS_AS(validate_layer_bounds(w), ValidationError);
}

TEST_CASE("finiteness detection") {
  ParamVector w(4, 1.0);
  CHECK(all_finite(w));
  w.coords[2] = std::nan("");
  CHECK_FALSE(all_finite(w));
  w.coords[2] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(all_finite(w));
}
