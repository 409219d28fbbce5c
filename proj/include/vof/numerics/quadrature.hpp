#ifndef VOF_NUMERICS_QUADRATURE_HPP
#define VOF_NUMERICS_QUADRATURE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vof/errors.hpp"

namespace vof {

struct Interval {
  double lo;
  double hi;

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/*
 * Describes how an integral should be evaluated.
 *
 *   GaussHermite      : fixed-order rule against a Gaussian weight, for
 *                       integrands supported on the whole real line.
 *   GaussLegendre     : fixed-order rule on a finite `domain`.
 *   AdaptiveTrapezoid : Romberg (trapezoid + Richardson) on bisected
 *                       subintervals until `tolerance` is met; `order`
 *                       caps the number of subintervals.
 */
struct QuadratureSpec {
  enum class Scheme { GaussHermite, GaussLegendre, AdaptiveTrapezoid };

  Scheme scheme = Scheme::AdaptiveTrapezoid;
  int order = 4000;
  std::optional<Interval> domain;
  double tolerance = 1e-10;

  static QuadratureSpec adaptive(double tolerance, int max_subdivisions = 4000) {
    return QuadratureSpec{Scheme::AdaptiveTrapezoid, max_subdivisions,
                          std::nullopt, tolerance};
  }

  static QuadratureSpec gauss_hermite(int order) {
    return QuadratureSpec{Scheme::GaussHermite, order, std::nullopt, 0.0};
  }

  static QuadratureSpec gauss_legendre(int order) {
    return QuadratureSpec{Scheme::GaussLegendre, order, std::nullopt, 0.0};
  }

  void validate() const {
    if (order < 1) {
      throw std::invalid_argument("QuadratureSpec: order must be >= 1");
    }
    if (scheme == Scheme::AdaptiveTrapezoid && !(tolerance > 0.0)) {
      throw std::invalid_argument("QuadratureSpec: tolerance must be > 0");
    }
    if (domain && !(domain->hi > domain->lo)) {
      throw std::invalid_argument("QuadratureSpec: empty domain");
    }
  }
};

struct QuadratureResult {
  double value = 0.0;
  double achieved_tol = 0.0;
  std::size_t evaluations = 0;
};

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

constexpr int cRombergLevels = 4;

struct RombergPiece {
  double lo;
  double hi;
  double value;
  double error;
  double magnitude;

  bool operator<(const RombergPiece &other) const {
    return error < other.error;
  }
};

// Trapezoid sums on 1, 2, 4, ... 2^L panels followed by Richardson
// extrapolation. The error estimate is the change between the two highest
// order extrapolants.
template <typename F>
RombergPiece romberg_piece(F &f, double lo, double hi, std::size_t *evals) {
  constexpr int L = cRombergLevels;
  std::array<std::array<double, L + 1>, L + 1> table{};
  const double width = hi - lo;
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  double abs_sum = 0.5 * (std::abs(f_lo) + std::abs(f_hi));
  table[0][0] = 0.5 * width * (f_lo + f_hi);
  *evals += 2;
  int panels = 1;
  for (int level = 1; level <= L; ++level) {
    const double h = width / (2 * panels);
    double mid_sum = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double value = f(lo + (2 * i + 1) * h);
      mid_sum += value;
      abs_sum += std::abs(value);
    }
    *evals += panels;
    panels *= 2;
    table[level][0] = 0.5 * table[level - 1][0] + h * mid_sum;
    double factor = 1.0;
    for (int j = 1; j <= level; ++j) {
      factor *= 4.0;
      table[level][j] = table[level][j - 1] +
                        (table[level][j - 1] - table[level - 1][j - 1]) /
                            (factor - 1.0);
    }
  }
  RombergPiece piece{lo, hi, table[L][L], 0.0, 0.0};
  piece.error = std::abs(table[L][L] - table[L - 1][L - 1]);
  piece.magnitude = abs_sum * width / panels;
  if (!std::isfinite(piece.value) || !std::isfinite(piece.error)) {
    piece.error = std::numeric_limits<double>::infinity();
  }
  return piece;
}

} // namespace detail

/*
 * Globally adaptive Romberg integration over a finite interval. The
 * subinterval with the largest error estimate is bisected until the summed
 * estimate falls below `tol` (or below the round-off floor implied by the
 * integrand's magnitude). Throws ToleranceNotReached otherwise.
 */
template <typename F>
QuadratureResult adaptive_integrate(F &&f, Interval domain, double tol,
                                    int max_subdivisions = 4000,
                                    int initial_pieces = 8) {
  if (!(domain.hi > domain.lo)) {
    if (domain.hi == domain.lo) {
      return {};
    }
    throw std::invalid_argument("adaptive_integrate: reversed interval");
  }
  if (!(tol > 0.0)) {
    throw std::invalid_argument("adaptive_integrate: tolerance must be > 0");
  }
  std::size_t evals = 0;
  std::priority_queue<detail::RombergPiece> pieces;
  double total_error = 0.0;
  double total_magnitude = 0.0;
  const double step = domain.width() / initial_pieces;
  for (int i = 0; i < initial_pieces; ++i) {
    const double lo = domain.lo + i * step;
    const double hi = (i + 1 == initial_pieces) ? domain.hi : lo + step;
    auto piece = detail::romberg_piece(f, lo, hi, &evals);
    total_error += piece.error;
    total_magnitude += piece.magnitude;
    pieces.push(piece);
  }

  const double eps = std::numeric_limits<double>::epsilon();
  auto floor_tol = [&]() { return 64.0 * eps * total_magnitude; };
  int count = initial_pieces;
  while (total_error > std::max(tol, floor_tol())) {
    if (!std::isfinite(total_error)) {
      throw ToleranceNotReached("adaptive_integrate: non-finite integrand",
                                total_error, tol);
    }
    if (count >= max_subdivisions) {
      throw ToleranceNotReached(
          "adaptive_integrate: subdivision limit reached", total_error, tol);
    }
    auto worst = pieces.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      throw ToleranceNotReached(
          "adaptive_integrate: interval cannot be bisected further",
          total_error, tol);
    }
    pieces.pop();
    auto left = detail::romberg_piece(f, worst.lo, mid, &evals);
    auto right = detail::romberg_piece(f, mid, worst.hi, &evals);
    total_error += left.error + right.error - worst.error;
    total_magnitude += left.magnitude + right.magnitude - worst.magnitude;
    pieces.push(left);
    pieces.push(right);
    ++count;
    // Re-sum occasionally so the running totals do not drift.
    if (count % 256 == 0) {
      auto copy = pieces;
      total_error = 0.0;
      total_magnitude = 0.0;
      while (!copy.empty()) {
        total_error += copy.top().error;
        total_magnitude += copy.top().magnitude;
        copy.pop();
      }
    }
  }

  std::vector<double> values;
  values.reserve(pieces.size());
  double error = 0.0;
  while (!pieces.empty()) {
    values.push_back(pieces.top().value);
    error += pieces.top().error;
    pieces.pop();
  }
  std::sort(values.begin(), values.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  return {sum, std::max(error, floor_tol()), evals};
}

/*
 * Integral over the whole real line. The domain is truncated at +/-L where L
 * starts at 10 * scale and grows until the integrand is below tol * 1e-3 at
 * both ends and at 1.5 L.
 */
template <typename F>
QuadratureResult integrate_real_line(F &&f, double scale, double tol,
                                     int max_subdivisions = 4000) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("integrate_real_line: scale must be > 0");
  }
  const double threshold = tol * 1e-3;
  double L = 10.0 * scale;
  auto small_at = [&](double x) {
    return std::abs(f(x)) <= threshold && std::abs(f(-x)) <= threshold;
  };
  int grow = 0;
  while (!(small_at(L) && small_at(1.5 * L))) {
    L *= 1.5;
    if (++grow > 60) {
      throw ToleranceNotReached(
          "integrate_real_line: integrand does not decay", std::abs(f(L)),
          threshold);
    }
  }
  return adaptive_integrate(f, Interval{-L, L}, tol, max_subdivisions, 16);
}

/*
 * Computes int_0^inf f(w) cos(w tau) dw for a non-negative, eventually
 * monotone f (spectral densities). tau == 0 uses the map w = scale tan(t);
 * otherwise the half-line is split at the zeros of cos(w tau) and the
 * alternating partial sums are accelerated by iterated averaging.
 */
template <typename F>
QuadratureResult integrate_fourier_cos(F &&f, double tau, double scale,
                                       double tol, int max_pieces = 2000) {
  const double pi = std::numbers::pi;
  if (!(scale > 0.0)) {
    throw std::invalid_argument("integrate_fourier_cos: scale must be > 0");
  }
  tau = std::abs(tau);
  if (tau == 0.0) {
    auto mapped = [&](double t) {
      const double c = std::cos(t);
      if (c <= 0.0) {
        // f(w) w^2 at w -> inf; finite for every spectral density we use
        const double w = 1.0 / std::numeric_limits<double>::epsilon();
        return f(scale * w) * scale * w * w;
      }
      return f(scale * std::tan(t)) * scale / (c * c);
    };
    return adaptive_integrate(mapped, Interval{0.0, 0.5 * pi}, tol);
  }

  const double period = pi / tau;
  const double piece_tol = tol * 1e-2;
  std::vector<double> partial;
  QuadratureResult result;
  double lo = 0.0;
  double hi = 0.5 * period;
  double sum = 0.0;
  double previous_estimate = std::numeric_limits<double>::quiet_NaN();
  int stable = 0;
  auto integrand = [&](double w) { return f(w) * std::cos(w * tau); };
  // the accelerator uses the last `depth` partial sums
  constexpr std::size_t depth = 24;
  for (int k = 0; k < max_pieces; ++k) {
    auto piece = adaptive_integrate(integrand, Interval{lo, hi}, piece_tol);
    result.evaluations += piece.evaluations;
    result.achieved_tol += piece.achieved_tol;
    sum += piece.value;
    partial.push_back(sum);
    lo = hi;
    hi += period;

    if (partial.size() < 4) {
      continue;
    }
    const std::size_t n = std::min(depth, partial.size());
    std::vector<double> level(partial.end() - static_cast<long>(n),
                              partial.end());
    for (std::size_t width = n; width > 1; --width) {
      for (std::size_t i = 0; i + 1 < width; ++i) {
        level[i] = 0.5 * (level[i] + level[i + 1]);
      }
    }
    const double estimate = level[0];
    const double change = std::abs(estimate - previous_estimate);
    previous_estimate = estimate;
    if (change <= 0.1 * tol && partial.size() >= depth / 2) {
      if (++stable >= 3) {
        result.value = estimate;
        result.achieved_tol += change;
        return result;
      }
    } else {
      stable = 0;
    }
  }
  throw ToleranceNotReached("integrate_fourier_cos: series did not converge",
                            std::abs(previous_estimate - sum), tol);
}

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline QuadratureRule gauss_legendre_rule(int order) {
  if (order < 1 || order > 4096) {
    throw std::invalid_argument("gauss_legendre_rule: order out of range");
  }
  const int n = order;
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      derivative = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

inline QuadratureRule gauss_legendre_rule(int order, Interval domain) {
  auto rule = gauss_legendre_rule(order);
  const double half = 0.5 * domain.width();
  const double mid = 0.5 * (domain.lo + domain.hi);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

} // namespace vof

#endif
