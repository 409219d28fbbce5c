#ifndef VOF_SVGP_VARIATIONAL_HPP
#define VOF_SVGP_VARIATIONAL_HPP

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "vof/errors.hpp"
#include "vof/features/kuu.hpp"

namespace vof {

/*
 * q(u) = N(m, S). Dense S is held as its lower Cholesky factor L (positive
 * diagonal); diagonal S as a vector of variances.
 */
class VariationalDistribution {
public:
  enum class Structure { Dense, Diagonal };

  static VariationalDistribution prior(int M, Structure structure = Structure::Dense) {
    if (structure == Structure::Dense) {
      return dense(Eigen::VectorXd::Zero(M), Eigen::MatrixXd::Identity(M, M));
    }
    return diagonal(Eigen::VectorXd::Zero(M), Eigen::VectorXd::Ones(M));
  }

  // m = 0, S = Kuu.
  static VariationalDistribution prior(const KuuDescriptor &kuu,
                                       Structure structure = Structure::Dense) {
    if (kuu.is_identity()) {
      return prior(static_cast<int>(kuu.size()), structure);
    }
    if (structure == Structure::Diagonal) {
      throw std::invalid_argument("VariationalDistribution: diagonal prior needs Kuu = I");
    }
    return dense(Eigen::VectorXd::Zero(kuu.size()), kuu.cholesky().matrixL());
  }

  static VariationalDistribution dense(const Eigen::VectorXd &mean,
                                       const Eigen::MatrixXd &factor) {
    if (factor.rows() != mean.size() || factor.cols() != mean.size()) {
      throw std::invalid_argument("VariationalDistribution: factor shape mismatch");
    }
    for (Eigen::Index j = 0; j < factor.cols(); ++j) {
      if (!(factor(j, j) > 0.0)) {
        throw NotPositiveDefinite("VariationalDistribution: factor diagonal must be > 0");
      }
    }
    VariationalDistribution q;
    q.structure_ = Structure::Dense;
    q.mean_ = mean;
    q.factor_ = factor.triangularView<Eigen::Lower>();
    return q;
  }

  static VariationalDistribution diagonal(const Eigen::VectorXd &mean,
                                          const Eigen::VectorXd &variances) {
    if (variances.size() != mean.size()) {
      throw std::invalid_argument("VariationalDistribution: variance shape mismatch");
    }
    if (!(variances.array() > 0.0).all()) {
      throw NotPositiveDefinite("VariationalDistribution: variances must be > 0");
    }
    VariationalDistribution q;
    q.structure_ = Structure::Diagonal;
    q.mean_ = mean;
    q.variances_ = variances;
    return q;
  }

  // Diagonal structure keeps only diag(S).
  static VariationalDistribution from_covariance(const Eigen::VectorXd &mean,
                                                 const Eigen::MatrixXd &S,
                                                 Structure structure = Structure::Dense) {
    if (structure == Structure::Diagonal) {
      return diagonal(mean, S.diagonal());
    }
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("VariationalDistribution: S is not positive definite");
    }
    return dense(mean, llt.matrixL());
  }

  int size() const { return static_cast<int>(mean_.size()); }
  Structure structure() const { return structure_; }
  bool is_diagonal() const { return structure_ == Structure::Diagonal; }

  const Eigen::VectorXd &mean() const { return mean_; }

  const Eigen::MatrixXd &factor() const {
    if (is_diagonal()) {
      throw std::logic_error("VariationalDistribution: diagonal q has no dense factor");
    }
    return factor_;
  }

  const Eigen::VectorXd &variances() const {
    if (!is_diagonal()) {
      throw std::logic_error("VariationalDistribution: dense q has no variance vector");
    }
    return variances_;
  }

  Eigen::MatrixXd covariance() const {
    if (is_diagonal()) {
      return variances_.asDiagonal();
    }
    return factor_ * factor_.transpose();
  }

  Eigen::VectorXd covariance_diagonal() const {
    if (is_diagonal()) {
      return variances_;
    }
    return factor_.rowwise().squaredNorm();
  }

  double log_determinant() const {
    if (is_diagonal()) {
      return variances_.array().log().sum();
    }
    return 2.0 * factor_.diagonal().array().log().sum();
  }

  double trace() const { return covariance_diagonal().sum(); }

  VariationalDistribution with_mean(const Eigen::VectorXd &mean) const {
    if (mean.size() != mean_.size()) {
      throw std::invalid_argument("VariationalDistribution: mean shape mismatch");
    }
    VariationalDistribution q = *this;
    q.mean_ = mean;
    return q;
  }

private:
  VariationalDistribution() = default;

  Structure structure_ = Structure::Dense;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
  Eigen::VectorXd variances_;
};

inline std::string to_string(VariationalDistribution::Structure s) {
  return s == VariationalDistribution::Structure::Dense ? "dense" : "diagonal";
}

} // namespace vof

#endif
