#ifndef VOF_NUMERICS_RANDOM_HPP
#define VOF_NUMERICS_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <vector>

namespace vof {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

} // namespace detail

// Stable 64-bit key for a sub-stream identified by a seed and a path of ids,
// e.g. (seed, batch_index, estimator_id).
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t key = detail::splitmix64(seed);
  for (auto id : path) {
    key = detail::splitmix64(key ^ detail::splitmix64(id + 0x632BE59BD9B4E019ULL));
  }
  return key;
}

/*
 * Seedable generator. Sub-streams are obtained with `split`, never by
 * sharing one engine between consumers, so results do not depend on the
 * order in which independent work items are evaluated.
 */
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  RandomStream split(std::initializer_list<std::uint64_t> path) const {
    return RandomStream(derive_seed(seed_, path));
  }

  std::uint64_t seed() const { return seed_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(engine_); }

  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64 &engine() { return engine_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/*
 * Grid-shifted sampler: one offset u ~ U[0, 1/T] places T points at
 * (i - 1)/T + u on the unit interval, rescaled to [lo, hi]. Each point is
 * uniform on its own cell, so the sample mean of f is unbiased for the
 * average of f over [lo, hi].
 */
struct StratifiedSampler {
  int T = 1;
  std::uint64_t seed = 0;
  double lo = 0.0;
  double hi = 1.0;

  StratifiedSampler() = default;

  StratifiedSampler(int T_, std::uint64_t seed_, double lo_, double hi_)
      : T(T_), seed(seed_), lo(lo_), hi(hi_) {
    validate();
  }

  void validate() const {
    if (T < 1) {
      throw std::invalid_argument("StratifiedSampler: T must be >= 1");
    }
    if (!(hi > lo)) {
      throw std::invalid_argument("StratifiedSampler: empty interval");
    }
  }

  // Independent sampler for the sub-stream `path`.
  StratifiedSampler split(std::initializer_list<std::uint64_t> path) const {
    StratifiedSampler out = *this;
    out.seed = derive_seed(seed, path);
    return out;
  }

  double width() const { return hi - lo; }
};

// Deterministic part of a stratified draw, exposed so the offset can be
// forced in tests.
inline std::vector<double> stratified_points(int T, double offset, double lo,
                                             double hi) {
  if (T < 1) {
    throw std::invalid_argument("stratified_points: T must be >= 1");
  }
  std::vector<double> points(T);
  const double width = hi - lo;
  for (int i = 0; i < T; ++i) {
    const double unit = static_cast<double>(i) / T + offset;
    points[i] = lo + width * unit;
  }
  return points;
}

inline std::vector<double> stratified_draw(const StratifiedSampler &sampler) {
  sampler.validate();
  RandomStream stream(sampler.seed);
  const double offset = stream.uniform() / sampler.T;
  return stratified_points(sampler.T, offset, sampler.lo, sampler.hi);
}

} // namespace vof

#endif
