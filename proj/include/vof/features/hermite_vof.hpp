#ifndef VOF_FEATURES_HERMITE_VOF_HPP
#define VOF_FEATURES_HERMITE_VOF_HPP

#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "vof/errors.hpp"
#include "vof/features/kuu.hpp"
#include "vof/kernels.hpp"
#include "vof/numerics/hermite.hpp"

namespace vof {

/*
 * Hermite variational orthogonal features for the SE kernel.
 *
 * Spectral basis (real form):
 *   psi_m(w) = (-1)^{floor(m/2)} sqrt(r) h_m(r w),
 * with h_m the orthonormal Hermite functions. With P = r^2 + l^2/2,
 * Q = r^2 - l^2/2 and z = r x / sqrt(P Q):
 *
 *   Kuf_m(x) = 2^{1/4} sqrt(v l r / P) e^{-x^2/(2P)} (Q/P)^{m/2} H_m(z) / sqrt(2^m m!)
 *   g_m(x)   = (2 pi)^{-1/4} sqrt(r) / (pi^{1/4} sqrt(v l Q)) e^{-x^2/(2Q)}
 *              (P/Q)^{m/2} H_m(z) / sqrt(2^m m!)
 */
class HermiteVOF {
public:
  HermiteVOF(int M, double r, const KernelParams &kernel) : M_(M), r_(r), kernel_(kernel) {
    if (M < 0) {
      throw std::invalid_argument("HermiteVOF: M must be >= 0");
    }
    if (kernel.family() != KernelFamily::SquaredExponential) {
      throw std::invalid_argument("HermiteVOF: closed form exists only for the SE kernel");
    }
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("HermiteVOF: r must be > 0");
    }
    const double l = kernel.lengthscale();
    if (!(2.0 * r * r > l * l)) {
      throw ConstraintViolated("HermiteVOF: requires 2 r^2 > l^2");
    }
  }

  int size() const { return M_; }
  double r() const { return r_; }
  const KernelParams &kernel() const { return kernel_; }

  HermiteVOF with_r(double r) const { return HermiteVOF(M_, r, kernel_); }
  HermiteVOF with_kernel(const KernelParams &kernel) const {
    return HermiteVOF(M_, r_, kernel);
  }
  HermiteVOF with_size(int M) const { return HermiteVOF(M, r_, kernel_); }

  double P() const {
    const double l = kernel_.lengthscale();
    return r_ * r_ + 0.5 * l * l;
  }
  double Q() const {
    const double l = kernel_.lengthscale();
    return r_ * r_ - 0.5 * l * l;
  }

  // All M entries of Kuf for a single input.
  Eigen::VectorXd kuf_column(double x) const {
    Eigen::VectorXd out(M_);
    fill_kuf(x, out);
    return out;
  }

  double kuf(int m, double x) const {
    check_index(m);
    Eigen::VectorXd out(m + 1);
    fill_kuf(x, out);
    return out[m];
  }

  Eigen::MatrixXd kuf(const Eigen::VectorXd &X) const {
    Eigen::MatrixXd out(M_, X.size());
    for (Eigen::Index n = 0; n < X.size(); ++n) {
      fill_kuf(X[n], out.col(n));
    }
    return out;
  }

  double g(int m, double x) const {
    check_index(m);
    const double p = P();
    const double q = Q();
    const double v = kernel_.variance();
    const double l = kernel_.lengthscale();
    const double prefactor = std::pow(2.0 * std::numbers::pi, -0.25) * std::sqrt(r_) /
                             (std::pow(std::numbers::pi, 0.25) * std::sqrt(v * l * q)) *
                             std::exp(-0.5 * x * x / q);
    Eigen::VectorXd out(m + 1);
    scaled_hermite_sequence(r_ * x / std::sqrt(p * q), std::sqrt(p / q), prefactor, out);
    return out[m];
  }

  double psi(int m, double omega) const {
    const double sign = ((m / 2) % 2 == 0) ? 1.0 : -1.0;
    return sign * std::sqrt(r_) * normalized_hermite_function(m, r_ * omega);
  }

  std::optional<Interval> spectral_support() const { return std::nullopt; }

  // Width of the Gaussian envelope of psi_m sqrt(s).
  double spectral_scale() const {
    const double l = kernel_.lengthscale();
    return 1.0 / std::sqrt(0.5 * r_ * r_ + 0.25 * l * l);
  }

  KuuDescriptor kuu() const { return KuuDescriptor::identity(M_); }

private:
  void check_index(int m) const {
    if (m < 0) {
      throw std::invalid_argument("HermiteVOF: negative feature index");
    }
  }

  void fill_kuf(double x, Eigen::Ref<Eigen::VectorXd> out) const {
    const double p = P();
    const double q = Q();
    const double v = kernel_.variance();
    const double l = kernel_.lengthscale();
    const double prefactor =
        std::pow(2.0, 0.25) * std::sqrt(v * l * r_ / p) * std::exp(-0.5 * x * x / p);
    scaled_hermite_sequence(r_ * x / std::sqrt(p * q), std::sqrt(q / p), prefactor, out);
  }

  int M_;
  double r_;
  KernelParams kernel_;
};

inline double hermite_kuf(const HermiteVOF &feat, int m, double x) {
  return feat.kuf(m, x);
}

inline double hermite_gm(const HermiteVOF &feat, int m, double x) {
  return feat.g(m, x);
}

} // namespace vof

#endif
