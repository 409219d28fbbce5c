#ifndef VOF_FEATURES_KUU_HPP
#define VOF_FEATURES_KUU_HPP

#include <memory>

#include <Eigen/Dense>

#include "vof/errors.hpp"

namespace vof {

/*
 * Feature covariance Kuu. Orthogonal feature families hand out the identity
 * descriptor, so no M^3 factorization is ever performed for them; inducing
 * points carry a dense matrix and its Cholesky factor.
 */
class KuuDescriptor {
public:
  static KuuDescriptor identity(Eigen::Index size) {
    KuuDescriptor out;
    out.size_ = size;
    return out;
  }

  static KuuDescriptor dense(const Eigen::MatrixXd &matrix) {
    if (matrix.rows() != matrix.cols()) {
      throw std::invalid_argument("KuuDescriptor: matrix must be square");
    }
    KuuDescriptor out;
    out.size_ = matrix.rows();
    out.matrix_ = std::make_shared<const Eigen::MatrixXd>(matrix);
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(matrix);
    if (llt->info() != Eigen::Success) {
      throw NotPositiveDefinite("KuuDescriptor: Kuu is not positive definite");
    }
    out.cholesky_ = llt;
    return out;
  }

  bool is_identity() const { return matrix_ == nullptr; }

  Eigen::Index size() const { return size_; }

  Eigen::MatrixXd matrix() const {
    if (is_identity()) {
      return Eigen::MatrixXd::Identity(size_, size_);
    }
    return *matrix_;
  }

  // Kuu^{-1} B
  Eigen::MatrixXd solve(const Eigen::MatrixXd &B) const {
    if (is_identity()) {
      return B;
    }
    return cholesky_->solve(B);
  }

  double log_determinant() const {
    if (is_identity()) {
      return 0.0;
    }
    return 2.0 * cholesky_->matrixLLT().diagonal().array().log().sum();
  }

  const Eigen::LLT<Eigen::MatrixXd> &cholesky() const {
    if (is_identity()) {
      throw std::logic_error("KuuDescriptor: identity has no stored factor");
    }
    return *cholesky_;
  }

private:
  KuuDescriptor() = default;

  Eigen::Index size_ = 0;
  std::shared_ptr<const Eigen::MatrixXd> matrix_;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> cholesky_;
};

} // namespace vof

#endif
