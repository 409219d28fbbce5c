#ifndef VOF_FEATURES_TRIG_VOF_HPP
#define VOF_FEATURES_TRIG_VOF_HPP

#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "vof/features/kuu.hpp"
#include "vof/features/spectral.hpp"
#include "vof/kernels.hpp"
#include "vof/numerics/random.hpp"

namespace vof {

/*
 * Trigonometric features on the band [-a, a], for any stationary kernel.
 * Orthonormal Fourier basis, zero outside the band:
 *
 *   psi_0      = 1 / sqrt(2a)
 *   psi_{2k}   = cos(k pi w / a) / sqrt(a)        k >= 1
 *   psi_{2k+1} = sin((k + 1) pi w / a) / sqrt(a)  k >= 0
 *
 * Even indices are even functions, so the index parity picks cos or sin in
 * the spectral integral just as for the Hermite basis.
 */
class TrigVOF {
public:
  TrigVOF(int M, double a, const KernelParams &kernel) : M_(M), a_(a), kernel_(kernel) {
    if (M < 0) {
      throw std::invalid_argument("TrigVOF: M must be >= 0");
    }
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("TrigVOF: a must be > 0");
    }
  }

  int size() const { return M_; }
  double a() const { return a_; }
  const KernelParams &kernel() const { return kernel_; }

  TrigVOF with_a(double a) const { return TrigVOF(M_, a, kernel_); }
  TrigVOF with_kernel(const KernelParams &kernel) const { return TrigVOF(M_, a_, kernel); }

  // Angular frequency of basis element m, in units of pi / a.
  static int harmonic(int m) { return m % 2 == 0 ? m / 2 : (m + 1) / 2; }

  double psi(int m, double omega) const {
    if (m < 0) {
      throw std::invalid_argument("TrigVOF: negative feature index");
    }
    if (omega < -a_ || omega > a_) {
      return 0.0;
    }
    if (m == 0) {
      return 1.0 / std::sqrt(2.0 * a_);
    }
    const double arg = harmonic(m) * std::numbers::pi * omega / a_;
    return (m % 2 == 0 ? std::cos(arg) : std::sin(arg)) / std::sqrt(a_);
  }

  std::optional<Interval> spectral_support() const { return Interval{-a_, a_}; }
  double spectral_scale() const { return a_; }

  KuuDescriptor kuu() const { return KuuDescriptor::identity(M_); }

  // Gauss-Legendre order that resolves every basis element against inputs
  // up to max_abs_x.
  int default_quadrature_order(double max_abs_x) const {
    const double cycles = (a_ * max_abs_x + harmonic(M_) * std::numbers::pi) / std::numbers::pi;
    return static_cast<int>(std::ceil(4.0 * cycles)) + 64;
  }

  Eigen::MatrixXd kuf_quadrature(const Eigen::VectorXd &X) const {
    const double max_abs_x = X.size() > 0 ? X.cwiseAbs().maxCoeff() : 0.0;
    return spectral_kuf(*this, X,
                        QuadratureSpec::gauss_legendre(default_quadrature_order(max_abs_x)));
  }

private:
  int M_;
  double a_;
  KernelParams kernel_;
};

inline double trig_psi(const TrigVOF &feat, int m, double omega) {
  return feat.psi(m, omega);
}

inline void check_trig_sampler(const TrigVOF &feat, const StratifiedSampler &sampler) {
  sampler.validate();
  const double tol = 1e-12 * feat.a();
  if (std::abs(sampler.lo + feat.a()) > tol || std::abs(sampler.hi - feat.a()) > tol) {
    throw std::invalid_argument("TrigVOF: sampler interval must be [-a, a]");
  }
}

/*
 * One stratified Monte Carlo estimate of Kuf: T frequencies on [-a, a],
 * each with weight 2a / T. Unbiased for the band-limited spectral integral.
 */
inline Eigen::MatrixXd trig_kuf_estimate(const TrigVOF &feat, const Eigen::VectorXd &X,
                                         const StratifiedSampler &sampler) {
  check_trig_sampler(feat, sampler);
  const auto nodes = stratified_draw(sampler);
  const std::vector<double> weights(nodes.size(), sampler.width() / sampler.T);
  return spectral_kuf_from_nodes(feat, X, nodes, weights);
}

} // namespace vof

#endif
