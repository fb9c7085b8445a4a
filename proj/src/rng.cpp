#include "sngm/rng.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "sngm/errors.hpp"

namespace sngm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t splitmix64_scramble(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& word : state_) {
    sm += kGolden;
    word = splitmix64_scramble(sm);
  }
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

std::uint64_t SeededRng::next_below(std::uint64_t n) {
  if (n == 0) throw ValidationError("next_below: n must be >= 1");
  if (n == 1) return 0;
  const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(n - 1);
  std::uint64_t v;
  do {
    v = next_u64() & mask;
  } while (v >= n);
  return v;
}

double SeededRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_in(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

SeededRng SeededRng::child(std::uint64_t stream_id) const {
  return SeededRng(splitmix64_scramble(seed_ + (stream_id + 1) * kGolden));
}

std::vector<std::size_t> sample_indices_without_replacement(SeededRng& rng,
                                                            std::size_t n,
                                                            std::size_t batch) {
  if (batch == 0) throw ValidationError("sample_indices: batch must be >= 1");
  if (batch > n) {
    throw ValidationError("sample_indices: batch " + std::to_string(batch) +
                          " exceeds population " + std::to_string(n));
  }
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `batch` slots end up a uniform subset.
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(batch);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<std::size_t> sample_batch_indices(SeededRng& rng, std::size_t n,
                                              std::size_t batch) {
  if (n == 0) throw ValidationError("sample_batch_indices: empty population");
  if (batch == 0) throw ValidationError("sample_batch_indices: batch must be >= 1");
  if (batch <= n) return sample_indices_without_replacement(rng, n, batch);

  std::vector<std::size_t> out;
  out.reserve(batch);
  const std::size_t full_passes = batch / n;
  const std::size_t remainder = batch % n;
  for (std::size_t pass = 0; pass < full_passes; ++pass) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
  }
  if (remainder > 0) {
    auto tail = sample_indices_without_replacement(rng, n, remainder);
    out.insert(out.end(), tail.begin(), tail.end());
  }
  return out;
}

}  // namespace sngm
