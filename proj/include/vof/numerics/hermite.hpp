#ifndef VOF_NUMERICS_HERMITE_HPP
#define VOF_NUMERICS_HERMITE_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "vof/errors.hpp"
#include "vof/numerics/quadrature.hpp"

namespace vof {

constexpr int cMaxRawHermiteDegree = 200;

// Physicists' Hermite polynomial H_m(x), H_0 = 1, H_1 = 2x. Raw values
// overflow quickly; VOF code paths use the normalized recurrences below.
inline double hermite_polynomial(int m, double x) {
  if (m < 0) {
    throw std::invalid_argument("hermite_polynomial: negative degree");
  }
  if (m > cMaxRawHermiteDegree) {
    throw DegreeTooLarge("hermite_polynomial: degree " + std::to_string(m) +
                         " exceeds " + std::to_string(cMaxRawHermiteDegree));
  }
  double previous = 1.0;
  if (m == 0) {
    return previous;
  }
  double current = 2.0 * x;
  for (int n = 1; n < m; ++n) {
    const double next = 2.0 * x * current - 2.0 * n * previous;
    previous = current;
    current = next;
  }
  return current;
}

/*
 * Fills out[m] = prefactor * ratio^m * H_m(z) / sqrt(2^m m!) for m < count
 * using the recurrence on the scaled values
 *
 *   q_{m+1} = ratio sqrt(2/(m+1)) z q_m - ratio^2 sqrt(m/(m+1)) q_{m-1},
 *
 * which never forms H_m or m! explicitly.
 */
inline void scaled_hermite_sequence(double z, double ratio, double prefactor,
                                    Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index count = out.size();
  if (count == 0) {
    return;
  }
  out[0] = prefactor;
  if (count == 1) {
    return;
  }
  out[1] = ratio * std::sqrt(2.0) * z * prefactor;
  const double ratio_sq = ratio * ratio;
  for (Eigen::Index m = 1; m + 1 < count; ++m) {
    const double md = static_cast<double>(m);
    out[m + 1] = ratio * std::sqrt(2.0 / (md + 1.0)) * z * out[m] -
                 ratio_sq * std::sqrt(md / (md + 1.0)) * out[m - 1];
  }
}

// Orthonormal Hermite functions H_m(x) e^{-x^2/2} / sqrt(2^m m! sqrt(pi)).
inline Eigen::VectorXd normalized_hermite_functions(int count, double x) {
  if (count < 0) {
    throw std::invalid_argument("normalized_hermite_functions: count < 0");
  }
  Eigen::VectorXd out(count);
  scaled_hermite_sequence(
      x, 1.0, std::exp(-0.5 * x * x) / std::pow(std::numbers::pi, 0.25), out);
  return out;
}

inline double normalized_hermite_function(int m, double x) {
  return normalized_hermite_functions(m + 1, x)[m];
}

/*
 * Golub-Welsch eigenvalues of the Hermite Jacobi matrix, polished with
 * Newton steps on the orthonormal recurrence. Weights are Christoffel
 * numbers, w_i = exp(-x_i^2) / sum_k h_k(x_i)^2 with h_k the normalized
 * Hermite functions, so no factorials or large polynomial values appear.
 */
inline QuadratureRule gauss_hermite_nodes(int order) {
  if (order < 1 || order > 128) {
    throw std::invalid_argument("gauss_hermite_nodes: order must be in [1, 128]");
  }
  const int n = order;
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = std::sqrt(std::numbers::pi);
    return rule;
  }
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      jacobi, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd roots = solver.eigenvalues();

  for (int i = 0; i < n; ++i) {
    double x = roots[i];
    Eigen::VectorXd h(n + 1);
    for (int iter = 0; iter < 8; ++iter) {
      h = normalized_hermite_functions(n + 1, x);
      // d/dx [h_n e^{x^2/2}] e^{-x^2/2} = sqrt(2n) h_{n-1}
      const double step = h[n] / (std::sqrt(2.0 * n) * h[n - 1]);
      if (!std::isfinite(step)) {
        break;
      }
      x -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) {
        break;
      }
    }
    h = normalized_hermite_functions(n, x);
    rule.nodes[i] = x;
    rule.weights[i] = std::exp(-x * x) / h.squaredNorm();
  }
  // enforce exact symmetry
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    rule.nodes[n / 2] = 0.0;
  }
  return rule;
}

/*
 * Evaluates int H_m(r x) H_n(r x) exp(-r^2 x^2) dx, which should equal
 * sqrt(pi) 2^n n! delta_mn / r.
 */
inline double hermite_orthogonality_check(int m, int n, double r,
                                          const QuadratureSpec &quad) {
  if (m < 0 || n < 0 || m > 30 || n > 30) {
    throw std::invalid_argument(
        "hermite_orthogonality_check: degrees must lie in [0, 30]");
  }
  if (!(r > 0.0)) {
    throw std::invalid_argument("hermite_orthogonality_check: r must be > 0");
  }
  quad.validate();
  switch (quad.scheme) {
  case QuadratureSpec::Scheme::GaussHermite: {
    // substitute t = r x; the weight exp(-t^2) is absorbed by the rule
    const auto rule = gauss_hermite_nodes(quad.order);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double t = rule.nodes[i];
      sum += rule.weights[i] * hermite_polynomial(m, t) * hermite_polynomial(n, t);
    }
    return sum / r;
  }
  case QuadratureSpec::Scheme::GaussLegendre: {
    const Interval domain = quad.domain.value_or(Interval{-12.0 / r, 12.0 / r});
    const auto rule = gauss_legendre_rule(quad.order, domain);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const double t = r * rule.nodes[i];
      sum += rule.weights[i] * hermite_polynomial(m, t) *
             hermite_polynomial(n, t) * std::exp(-t * t);
    }
    return sum;
  }
  case QuadratureSpec::Scheme::AdaptiveTrapezoid: {
    auto integrand = [&](double x) {
      const double t = r * x;
      return hermite_polynomial(m, t) * hermite_polynomial(n, t) *
             std::exp(-t * t);
    };
    if (quad.domain) {
      return adaptive_integrate(integrand, *quad.domain, quad.tolerance,
                                quad.order)
          .value;
    }
    return integrate_real_line(integrand, 1.0 / r, quad.tolerance, quad.order)
        .value;
  }
  }
  throw std::logic_error("unreachable");
}

} // namespace vof

#endif
