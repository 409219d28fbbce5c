#ifndef VOF_FEATURES_EIGENFUNCTION_HPP
#define VOF_FEATURES_EIGENFUNCTION_HPP

#include <cmath>

#include <Eigen/Dense>

#include "vof/features/hermite_vof.hpp"
#include "vof/features/kuu.hpp"
#include "vof/kernels.hpp"
#include "vof/numerics/hermite.hpp"

namespace vof {

/*
 * Features from the eigenfunctions of the SE kernel operator under the
 * input density N(0, sigma^2):
 *
 *   a = 1/(4 sigma^2), b = 1/(2 l^2), c = sqrt(a^2 + 2ab), A = a + b + c, B = b/A
 *   phi_m(x)   = exp(-(c - a) x^2) H_m(sqrt(2c) x)
 *   lambda_m   = v sqrt(2a/A) B^m
 *   |phi_m|_p^2 = sqrt(a/c) 2^m m!
 *
 * u_m = lambda_m^{-1/2} int phi_m f p / |phi_m|_p has unit variance and
 * cov(u_m, f(x)) = sqrt(lambda_m) phi_m(x) / |phi_m|_p.
 */
class EigenfunctionFeatures {
public:
  EigenfunctionFeatures(int M, double input_sd, const KernelParams &kernel)
      : M_(M), input_sd_(input_sd), kernel_(kernel) {
    if (M < 0) {
      throw std::invalid_argument("EigenfunctionFeatures: M must be >= 0");
    }
    if (kernel.family() != KernelFamily::SquaredExponential) {
      throw std::invalid_argument("EigenfunctionFeatures: SE kernel required");
    }
    if (!(input_sd > 0.0) || !std::isfinite(input_sd)) {
      throw std::invalid_argument("EigenfunctionFeatures: input sd must be > 0");
    }
    const double l = kernel.lengthscale();
    a_ = 0.25 / (input_sd * input_sd);
    b_ = 0.5 / (l * l);
    c_ = std::sqrt(a_ * a_ + 2.0 * a_ * b_);
    A_ = a_ + b_ + c_;
    B_ = b_ / A_;
  }

  int size() const { return M_; }
  double input_sd() const { return input_sd_; }
  const KernelParams &kernel() const { return kernel_; }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double A() const { return A_; }
  double B() const { return B_; }

  // Unnormalized eigenfunction; limited by the raw Hermite degree guard.
  double phi(int m, double x) const {
    return std::exp(-(c_ - a_) * x * x) * hermite_polynomial(m, std::sqrt(2.0 * c_) * x);
  }

  double lambda(int m) const {
    return kernel_.variance() * std::sqrt(2.0 * a_ / A_) * std::pow(B_, m);
  }

  double phi_norm_sq(int m) const {
    return std::sqrt(a_ / c_) * std::exp(m * std::log(2.0) + std::lgamma(m + 1.0));
  }

  Eigen::VectorXd kuf_column(double x) const {
    Eigen::VectorXd out(M_);
    fill_kuf(x, out);
    return out;
  }

  double kuf(int m, double x) const {
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

  KuuDescriptor kuu() const { return KuuDescriptor::identity(M_); }

private:
  void fill_kuf(double x, Eigen::Ref<Eigen::VectorXd> out) const {
    const double prefactor = std::sqrt(kernel_.variance()) *
                             std::pow(2.0 * c_ / A_, 0.25) * std::exp(-(c_ - a_) * x * x);
    scaled_hermite_sequence(std::sqrt(2.0 * c_) * x, std::sqrt(B_), prefactor, out);
  }

  int M_;
  double input_sd_;
  KernelParams kernel_;
  double a_ = 0, b_ = 0, c_ = 0, A_ = 0, B_ = 0;
};

inline double eigen_phi(const EigenfunctionFeatures &feat, int m, double x) {
  return feat.phi(m, x);
}

inline double eigen_lambda(const EigenfunctionFeatures &feat, int m) {
  return feat.lambda(m);
}

// The eigenfunction family that reproduces the Hermite features.
inline EigenfunctionFeatures hermite_eigen_equivalence(const HermiteVOF &feat) {
  const double r = feat.r();
  const double l = feat.kernel().lengthscale();
  const double var = (4.0 * std::pow(r, 4) - std::pow(l, 4)) / (4.0 * l * l);
  if (!(var > 0.0)) {
    throw ConstraintViolated("hermite_eigen_equivalence: requires 2 r^2 > l^2");
  }
  return EigenfunctionFeatures(feat.size(), std::sqrt(var), feat.kernel());
}

} // namespace vof

#endif
