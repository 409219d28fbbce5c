#ifndef VOF_FEATURES_SPECTRAL_HPP
#define VOF_FEATURES_SPECTRAL_HPP

#include <cmath>
#include <concepts>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vof/kernels.hpp"
#include "vof/numerics/hermite.hpp"
#include "vof/numerics/quadrature.hpp"

namespace vof {

/*
 * A family defined through a real spectral basis psi_m. Even m pair with a
 * cosine transform and odd m with a sine transform, so
 *
 *   Kuf_m(x) = (2 pi)^{-1/4} int psi_m(w) sqrt(s(w)) cs_m(w x) dw
 *
 * where cs_m is cos or sin. The (2 pi)^{-1/4} makes Kuu = I for an
 * orthonormal basis.
 */
template <typename F>
concept SpectralFamily = requires(const F &f, int m, double w) {
  { f.size() } -> std::convertible_to<int>;
  { f.kernel() } -> std::convertible_to<KernelParams>;
  { f.psi(m, w) } -> std::convertible_to<double>;
  { f.spectral_support() } -> std::convertible_to<std::optional<Interval>>;
  { f.spectral_scale() } -> std::convertible_to<double>;
};

inline double feature_normalizer() {
  return std::pow(2.0 * std::numbers::pi, -0.25);
}

inline bool is_even_feature(int m) { return m % 2 == 0; }

// Kuf from an arbitrary weighted node set in frequency space.
template <SpectralFamily F>
Eigen::MatrixXd spectral_kuf_from_nodes(const F &feat, const Eigen::VectorXd &X,
                                        const std::vector<double> &nodes,
                                        const std::vector<double> &weights) {
  const int M = feat.size();
  const Eigen::Index T = static_cast<Eigen::Index>(nodes.size());
  const Eigen::Index N = X.size();
  Eigen::MatrixXd even = Eigen::MatrixXd::Zero(M, T);
  Eigen::MatrixXd odd = Eigen::MatrixXd::Zero(M, T);
  const double norm = feature_normalizer();
  for (Eigen::Index t = 0; t < T; ++t) {
    const double w = nodes[t];
    const double scale = norm * weights[t] * std::sqrt(spectral_density(feat.kernel(), w));
    for (int m = 0; m < M; ++m) {
      (is_even_feature(m) ? even : odd)(m, t) = scale * feat.psi(m, w);
    }
  }
  Eigen::MatrixXd out(M, N);
  constexpr Eigen::Index block = 256;
  for (Eigen::Index start = 0; start < N; start += block) {
    const Eigen::Index len = std::min(block, N - start);
    Eigen::MatrixXd phase = Eigen::VectorXd::Map(nodes.data(), T) *
                            X.segment(start, len).transpose();
    out.middleCols(start, len) =
        even * phase.array().cos().matrix() + odd * phase.array().sin().matrix();
  }
  return out;
}

namespace detail {

// Gauss-Hermite nodes rescaled to w = scale t, weights absorbing e^{t^2}.
inline void scaled_gauss_hermite(int order, double scale, std::vector<double> &nodes,
                                 std::vector<double> &weights) {
  const auto rule = gauss_hermite_nodes(order);
  nodes.resize(rule.size());
  weights.resize(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double t = rule.nodes[i];
    nodes[i] = scale * t;
    weights[i] = scale * std::exp(std::log(rule.weights[i]) + t * t);
  }
}

} // namespace detail

/*
 * Kuf by numerical quadrature of the spectral integral. Fixed rules share
 * their nodes across all (m, x); the adaptive scheme integrates each entry
 * separately and is meant for verification.
 */
template <SpectralFamily F>
Eigen::MatrixXd spectral_kuf(const F &feat, const Eigen::VectorXd &X,
                             const QuadratureSpec &quad) {
  quad.validate();
  const std::optional<Interval> support =
      quad.domain ? quad.domain : feat.spectral_support();
  std::vector<double> nodes;
  std::vector<double> weights;
  switch (quad.scheme) {
  case QuadratureSpec::Scheme::GaussHermite:
    if (support) {
      throw std::invalid_argument(
          "spectral_kuf: Gauss-Hermite needs a real-line spectral basis");
    }
    detail::scaled_gauss_hermite(quad.order, feat.spectral_scale(), nodes, weights);
    return spectral_kuf_from_nodes(feat, X, nodes, weights);
  case QuadratureSpec::Scheme::GaussLegendre: {
    if (!support) {
      throw std::invalid_argument(
          "spectral_kuf: Gauss-Legendre needs a bounded domain");
    }
    const auto rule = gauss_legendre_rule(quad.order, *support);
    return spectral_kuf_from_nodes(feat, X, rule.nodes, rule.weights);
  }
  case QuadratureSpec::Scheme::AdaptiveTrapezoid:
    break;
  }
  const int M = feat.size();
  Eigen::MatrixXd out(M, X.size());
  const double norm = feature_normalizer();
  for (Eigen::Index n = 0; n < X.size(); ++n) {
    for (int m = 0; m < M; ++m) {
      const double x = X[n];
      auto integrand = [&](double w) {
        const double wave = is_even_feature(m) ? std::cos(w * x) : std::sin(w * x);
        return feat.psi(m, w) * std::sqrt(spectral_density(feat.kernel(), w)) * wave;
      };
      const double value =
          support ? adaptive_integrate(integrand, *support, quad.tolerance, quad.order)
                        .value
                  : integrate_real_line(integrand, feat.spectral_scale(), quad.tolerance,
                                        quad.order)
                        .value;
      out(m, n) = norm * value;
    }
  }
  return out;
}

// Gram matrix int psi_m psi_m' dw, which equals cov(u_m, u_m') for a
// spectral family.
template <SpectralFamily F>
Eigen::MatrixXd spectral_gram(const F &feat, const QuadratureSpec &quad) {
  quad.validate();
  const int M = feat.size();
  const std::optional<Interval> support =
      quad.domain ? quad.domain : feat.spectral_support();
  std::vector<double> nodes;
  std::vector<double> weights;
  if (quad.scheme == QuadratureSpec::Scheme::GaussLegendre) {
    if (!support) {
      throw std::invalid_argument("spectral_gram: Gauss-Legendre needs a domain");
    }
    const auto rule = gauss_legendre_rule(quad.order, *support);
    nodes = rule.nodes;
    weights = rule.weights;
  } else if (quad.scheme == QuadratureSpec::Scheme::GaussHermite) {
    detail::scaled_gauss_hermite(quad.order, feat.spectral_scale(), nodes, weights);
  }
  Eigen::MatrixXd out(M, M);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j <= i; ++j) {
      auto integrand = [&](double w) { return feat.psi(i, w) * feat.psi(j, w); };
      double value = 0.0;
      if (!nodes.empty()) {
        for (std::size_t k = 0; k < nodes.size(); ++k) {
          value += weights[k] * integrand(nodes[k]);
        }
      } else if (support) {
        value = adaptive_integrate(integrand, *support, quad.tolerance, quad.order).value;
      } else {
        value = integrate_real_line(integrand, feat.spectral_scale(), quad.tolerance,
                                    quad.order)
                    .value;
      }
      out(i, j) = out(j, i) = value;
    }
  }
  return out;
}

} // namespace vof

#endif
