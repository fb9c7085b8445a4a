#pragma once

#include <cstdint>
#include <vector>

namespace sngm {

// Deterministic, platform-independent generator: xoshiro256** seeded through
// splitmix64. The same seed produces the same bit stream on every platform;
// std::* distributions are deliberately avoided because their output is
// implementation-defined. Reference vectors live in the README and in
// tests/unit/test_rng.cpp.
//
// A SeededRng is single-owner. Parallel workloads split work by deriving
// child generators with child(stream_id); never share one instance across
// concurrent consumers.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  // Next 64 raw bits.
  std::uint64_t next_u64();

  // Uniform in [0, n). Unbiased via masked rejection. n must be >= 1.
  std::uint64_t next_below(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double next_double();

  // Uniform double in [lo, hi).
  double next_in(double lo, double hi);

  // Deterministically derived independent stream. child(k) of a given parent
  // seed is stable across runs and platforms:
  //   child_seed = splitmix64_scramble(parent_seed + (k + 1) * 0x9E3779B97F4A7C15)
  SeededRng child(std::uint64_t stream_id) const;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t state_[4] = {0, 0, 0, 0};
};

// B distinct indices drawn uniformly from [0, n), returned sorted.
// Requires 1 <= B <= n; throws ValidationError otherwise.
std::vector<std::size_t> sample_indices_without_replacement(SeededRng& rng,
                                                            std::size_t n,
                                                            std::size_t batch);

// Batch index sampler that also admits batch > n: the batch is filled with
// floor(batch/n) full passes over [0, n) plus one without-replacement draw of
// the remainder. For batch <= n it is exactly
// sample_indices_without_replacement. A batch that is a multiple of n
// therefore averages to the exact full gradient.
std::vector<std::size_t> sample_batch_indices(SeededRng& rng, std::size_t n,
                                              std::size_t batch);

}  // namespace sngm
