#ifndef VOF_KERNELS_HPP
#define VOF_KERNELS_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "vof/numerics/quadrature.hpp"

namespace vof {

enum class KernelFamily { SquaredExponential, Matern12, Matern32, Matern52 };

inline std::string to_string(KernelFamily family) {
  switch (family) {
  case KernelFamily::SquaredExponential:
    return "se";
  case KernelFamily::Matern12:
    return "matern12";
  case KernelFamily::Matern32:
    return "matern32";
  case KernelFamily::Matern52:
    return "matern52";
  }
  return "unknown";
}

inline KernelFamily kernel_family_from_string(std::string_view name) {
  if (name == "se" || name == "squared_exponential" || name == "rbf") {
    return KernelFamily::SquaredExponential;
  }
  if (name == "matern12") {
    return KernelFamily::Matern12;
  }
  if (name == "matern32") {
    return KernelFamily::Matern32;
  }
  if (name == "matern52") {
    return KernelFamily::Matern52;
  }
  throw std::invalid_argument("unknown kernel family '" + std::string(name) +
                              "'");
}

/*
 * Hyperparameters of a stationary kernel on the real line: signal variance
 * v (units of y^2) and lengthscale l (input units). Both must be positive.
 */
class KernelParams {
public:
  KernelParams(KernelFamily family, double variance, double lengthscale)
      : family_(family), variance_(variance), lengthscale_(lengthscale) {
    if (!(variance > 0.0) || !std::isfinite(variance)) {
      throw std::invalid_argument("KernelParams: variance must be > 0");
    }
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
      throw std::invalid_argument("KernelParams: lengthscale must be > 0");
    }
  }

  static KernelParams squared_exponential(double variance, double lengthscale) {
    return KernelParams(KernelFamily::SquaredExponential, variance, lengthscale);
  }

  KernelFamily family() const { return family_; }
  double variance() const { return variance_; }
  double lengthscale() const { return lengthscale_; }

  KernelParams with_variance(double v) const {
    return KernelParams(family_, v, lengthscale_);
  }
  KernelParams with_lengthscale(double l) const {
    return KernelParams(family_, variance_, l);
  }

  bool operator==(const KernelParams &other) const = default;

private:
  KernelFamily family_;
  double variance_;
  double lengthscale_;
};

// Stationary covariance kappa(x - x').
inline double kernel_eval(const KernelParams &params, double x, double xp) {
  const double v = params.variance();
  const double l = params.lengthscale();
  const double tau = std::abs(x - xp);
  switch (params.family()) {
  case KernelFamily::SquaredExponential:
    return v * std::exp(-0.5 * tau * tau / (l * l));
  case KernelFamily::Matern12:
    return v * std::exp(-tau / l);
  case KernelFamily::Matern32: {
    const double z = std::sqrt(3.0) * tau / l;
    return v * (1.0 + z) * std::exp(-z);
  }
  case KernelFamily::Matern52: {
    const double z = std::sqrt(5.0) * tau / l;
    return v * (1.0 + z + z * z / 3.0) * std::exp(-z);
  }
  }
  return 0.0;
}

/*
 * Spectral density under kappa(tau) = (2 pi)^{-1/2} int e^{-i w tau} s(w) dw.
 * The Matern densities are the usual half-integer forms
 *
 *   S(w) = v 2 sqrt(pi) Gamma(nu + 1/2) / Gamma(nu) lambda^{2 nu}
 *          (lambda^2 + w^2)^{-(nu + 1/2)},   lambda = sqrt(2 nu) / l,
 *
 * divided by sqrt(2 pi) to match this convention.
 */
inline double spectral_density(const KernelParams &params, double omega) {
  const double v = params.variance();
  const double l = params.lengthscale();
  const double w2 = omega * omega;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  switch (params.family()) {
  case KernelFamily::SquaredExponential:
    return v * l * std::exp(-0.5 * l * l * w2);
  case KernelFamily::Matern12: {
    const double lam = 1.0 / l;
    return inv_sqrt_2pi * v * 2.0 * lam / (lam * lam + w2);
  }
  case KernelFamily::Matern32: {
    const double lam = std::sqrt(3.0) / l;
    const double d = lam * lam + w2;
    return inv_sqrt_2pi * v * 4.0 * lam * lam * lam / (d * d);
  }
  case KernelFamily::Matern52: {
    const double lam = std::sqrt(5.0) / l;
    const double d = lam * lam + w2;
    const double lam5 = lam * lam * lam * lam * lam;
    return inv_sqrt_2pi * v * (16.0 / 3.0) * lam5 / (d * d * d);
  }
  }
  return 0.0;
}

/*
 * Recovers kappa(tau) from the spectral density by numerical quadrature.
 * Without a domain the full real line is used (zero-splitting with series
 * acceleration); with a domain the integral is restricted to it, which
 * yields the band-limited kernel.
 */
inline double bochner_reconstruct(const KernelParams &params, double tau,
                                  const QuadratureSpec &quad) {
  quad.validate();
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  auto integrand = [&](double w) {
    return spectral_density(params, w) * std::cos(w * tau);
  };
  if (quad.domain) {
    if (quad.scheme == QuadratureSpec::Scheme::GaussLegendre) {
      const auto rule = gauss_legendre_rule(quad.order, *quad.domain);
      double sum = 0.0;
      for (std::size_t i = 0; i < rule.size(); ++i) {
        sum += rule.weights[i] * integrand(rule.nodes[i]);
      }
      return norm * sum;
    }
    return norm * adaptive_integrate(integrand, *quad.domain, quad.tolerance,
                                     quad.order)
                      .value;
  }
  if (quad.scheme != QuadratureSpec::Scheme::AdaptiveTrapezoid) {
    throw std::invalid_argument(
        "bochner_reconstruct: real-line reconstruction needs the adaptive "
        "scheme");
  }
  auto density = [&](double w) { return spectral_density(params, w); };
  // even integrand: twice the half-line integral
  const auto half = integrate_fourier_cos(density, tau, 1.0 / params.lengthscale(),
                                          0.5 * quad.tolerance / norm);
  return 2.0 * norm * half.value;
}

inline double default_jitter(const KernelParams &params) {
  return 1e-8 * params.variance();
}

struct KernelMatrix {
  Eigen::MatrixXd entries;
  double jitter = 0.0;

  Eigen::Index size() const { return entries.rows(); }
};

inline Eigen::MatrixXd cross_covariance(const KernelParams &params,
                                        const Eigen::VectorXd &X,
                                        const Eigen::VectorXd &Y) {
  Eigen::MatrixXd out(X.size(), Y.size());
  for (Eigen::Index j = 0; j < Y.size(); ++j) {
    for (Eigen::Index i = 0; i < X.size(); ++i) {
      out(i, j) = kernel_eval(params, X[i], Y[j]);
    }
  }
  return out;
}

inline KernelMatrix kernel_matrix(const KernelParams &params,
                                  const Eigen::VectorXd &X, double jitter) {
  if (!(jitter >= 0.0)) {
    throw std::invalid_argument("kernel_matrix: jitter must be >= 0");
  }
  if (!X.allFinite()) {
    throw std::invalid_argument("kernel_matrix: inputs must be finite");
  }
  const Eigen::Index n = X.size();
  KernelMatrix out{Eigen::MatrixXd(n, n), jitter};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.entries(j, j) = params.variance() + jitter;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      out.entries(i, j) = out.entries(j, i) = kernel_eval(params, X[i], X[j]);
    }
  }
  return out;
}

} // namespace vof

#endif
