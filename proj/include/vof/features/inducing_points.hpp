#ifndef VOF_FEATURES_INDUCING_POINTS_HPP
#define VOF_FEATURES_INDUCING_POINTS_HPP

#include <optional>

#include <Eigen/Dense>

#include "vof/features/kuu.hpp"
#include "vof/kernels.hpp"

namespace vof {

// Classic inducing points u_m = f(z_m). Kuu is dense.
class InducingPoints {
public:
  InducingPoints(const Eigen::VectorXd &Z, const KernelParams &kernel,
                 std::optional<double> jitter = std::nullopt)
      : Z_(Z), kernel_(kernel), jitter_(jitter.value_or(default_jitter(kernel))) {
    if (!Z.allFinite()) {
      throw std::invalid_argument("InducingPoints: locations must be finite");
    }
  }

  int size() const { return static_cast<int>(Z_.size()); }
  const Eigen::VectorXd &locations() const { return Z_; }
  const KernelParams &kernel() const { return kernel_; }
  double jitter() const { return jitter_; }

  InducingPoints with_kernel(const KernelParams &kernel) const {
    return InducingPoints(Z_, kernel, jitter_);
  }

  Eigen::MatrixXd kuf(const Eigen::VectorXd &X) const {
    return cross_covariance(kernel_, Z_, X);
  }

  KuuDescriptor kuu() const {
    return KuuDescriptor::dense(kernel_matrix(kernel_, Z_, jitter_).entries);
  }

private:
  Eigen::VectorXd Z_;
  KernelParams kernel_;
  double jitter_;
};

} // namespace vof

#endif
