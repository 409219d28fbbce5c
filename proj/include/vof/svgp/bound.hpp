#ifndef VOF_SVGP_BOUND_HPP
#define VOF_SVGP_BOUND_HPP

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "vof/errors.hpp"
#include "vof/features/kuu.hpp"
#include "vof/svgp/variational.hpp"

namespace vof {

struct Provenance {
  enum class Kind { Analytic, MonteCarlo, GaussHermite, GaussLegendre, Adaptive };

  Kind kind = Kind::Analytic;
  // T for Monte Carlo, rule order for the fixed quadratures
  int parameter = 0;

  std::string to_string() const {
    switch (kind) {
    case Kind::Analytic:
      return "analytic";
    case Kind::MonteCarlo:
      return "monte_carlo(" + std::to_string(parameter) + ")";
    case Kind::GaussHermite:
      return "gauss_hermite(" + std::to_string(parameter) + ")";
    case Kind::GaussLegendre:
      return "gauss_legendre(" + std::to_string(parameter) + ")";
    case Kind::Adaptive:
      return "adaptive";
    }
    return "unknown";
  }
};

/*
 * Marginals of q(f) at a batch of inputs. `mean_square` estimates mu^2; it
 * equals mean^2 except for Monte Carlo moments, where it comes from two
 * independent estimators.
 */
struct MarginalMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_square;
  Eigen::VectorXd variance;
  Provenance provenance;
  int negative_variance_count = 0;
  int clamped_count = 0;

  Eigen::Index size() const { return mean.size(); }
};

/*
 * mu_n      = Kuf_n^T Kuu^{-1} m
 * sigma_n^2 = k(x_n, x_n) + Kuf_n^T Kuu^{-1} (S - Kuu) Kuu^{-1} Kuf_n
 *
 * With Kuu = I this is O(N M) for diagonal S and O(N M^2) for dense S.
 */
inline MarginalMoments marginals_from_kuf(const VariationalDistribution &q,
                                          const KuuDescriptor &kuu, const Eigen::MatrixXd &K,
                                          const Eigen::VectorXd &prior_variance) {
  if (K.rows() != q.size() || kuu.size() != q.size()) {
    throw std::invalid_argument("marginals_from_kuf: feature count mismatch");
  }
  MarginalMoments out;
  if (kuu.is_identity()) {
    out.mean = K.transpose() * q.mean();
    if (q.is_diagonal()) {
      const Eigen::VectorXd shift = q.variances().array() - 1.0;
      out.variance = prior_variance + K.cwiseAbs2().transpose() * shift;
    } else {
      const Eigen::MatrixXd LtK = q.factor().transpose() * K;
      out.variance = prior_variance + LtK.colwise().squaredNorm().transpose() -
                     K.colwise().squaredNorm().transpose();
    }
  } else {
    const Eigen::MatrixXd A = kuu.solve(K);
    out.mean = A.transpose() * q.mean();
    Eigen::VectorXd explained;
    if (q.is_diagonal()) {
      explained = A.cwiseAbs2().transpose() * q.variances();
    } else {
      explained = (q.factor().transpose() * A).colwise().squaredNorm().transpose();
    }
    out.variance = prior_variance + explained - K.cwiseProduct(A).colwise().sum().transpose();
  }
  out.mean_square = out.mean.cwiseAbs2();
  return out;
}

// KL(N(m, S) || N(0, Kuu)).
inline double kl_to_prior(const VariationalDistribution &q, const KuuDescriptor &kuu) {
  if (kuu.size() != q.size()) {
    throw std::invalid_argument("kl_to_prior: feature count mismatch");
  }
  const double M = q.size();
  if (kuu.is_identity()) {
    return 0.5 * (q.trace() + q.mean().squaredNorm() - M - q.log_determinant());
  }
  const auto &L = kuu.cholesky().matrixL();
  Eigen::MatrixXd S_half;
  if (q.is_diagonal()) {
    S_half = q.variances().cwiseSqrt().asDiagonal();
  } else {
    S_half = q.factor();
  }
  const double trace_term = L.solve(S_half).squaredNorm();
  const double mahalanobis = L.solve(q.mean()).squaredNorm();
  return 0.5 * (trace_term + mahalanobis - M + kuu.log_determinant() - q.log_determinant());
}

/*
 * sum_n [ -1/2 log(2 pi s2) - (y_n^2 - 2 y_n mu_n + mu_n^2 + sigma_n^2) / (2 s2) ]
 * where s2 is the noise variance.
 */
inline double gaussian_expected_log_likelihood(const Eigen::VectorXd &y,
                                               const MarginalMoments &moments,
                                               double noise_variance) {
  if (y.size() != moments.size()) {
    throw std::invalid_argument("gaussian_expected_log_likelihood: size mismatch");
  }
  const double n = static_cast<double>(y.size());
  const double quad = (y.cwiseAbs2() - 2.0 * y.cwiseProduct(moments.mean) +
                       moments.mean_square + moments.variance)
                          .sum();
  return -0.5 * n * std::log(2.0 * std::numbers::pi * noise_variance) -
         0.5 * quad / noise_variance;
}

// likelihood_scale = N / N_batch for minibatches.
inline double elbo_from_kuf(const VariationalDistribution &q, const KuuDescriptor &kuu,
                            const Eigen::MatrixXd &K, const Eigen::VectorXd &prior_variance,
                            const Eigen::VectorXd &y, double noise_variance,
                            double likelihood_scale = 1.0) {
  const auto moments = marginals_from_kuf(q, kuu, K, prior_variance);
  return likelihood_scale * gaussian_expected_log_likelihood(y, moments, noise_variance) -
         kl_to_prior(q, kuu);
}

/*
 * Optimal q for a Gaussian likelihood. With Kuu = I and A = I + K K^T / s2:
 *   S* = A^{-1},  m* = A^{-1} K y / s2.
 * Restricted to diagonal S the optimum is S_jj = 1 / A_jj with the same m*.
 * For a dense Kuu, S* = Kuu (Kuu + K K^T / s2)^{-1} Kuu.
 */
inline VariationalDistribution
optimal_q_from_kuf(const Eigen::MatrixXd &K, const Eigen::VectorXd &y, double noise_variance,
                   const KuuDescriptor &kuu,
                   VariationalDistribution::Structure structure =
                       VariationalDistribution::Structure::Dense) {
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("optimal_q: noise variance must be > 0");
  }
  const Eigen::Index M = K.rows();
  const Eigen::MatrixXd KKt = K * K.transpose() / noise_variance;
  const Eigen::VectorXd b = K * y / noise_variance;
  if (kuu.is_identity()) {
    Eigen::MatrixXd A = KKt;
    A.diagonal().array() += 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("optimal_q: I + K K^T / s2 is not positive definite");
    }
    const Eigen::VectorXd m = llt.solve(b);
    if (structure == VariationalDistribution::Structure::Diagonal) {
      return VariationalDistribution::diagonal(m, A.diagonal().cwiseInverse());
    }
    const Eigen::MatrixXd S = llt.solve(Eigen::MatrixXd::Identity(M, M));
    return VariationalDistribution::from_covariance(m, 0.5 * (S + S.transpose()));
  }
  if (structure == VariationalDistribution::Structure::Diagonal) {
    throw std::invalid_argument("optimal_q: diagonal structure needs Kuu = I");
  }
  const Eigen::MatrixXd Kuu = kuu.matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(Kuu + KKt);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("optimal_q: Kuu + K K^T / s2 is not positive definite");
  }
  const Eigen::MatrixXd S = Kuu * llt.solve(Kuu);
  const Eigen::VectorXd m = Kuu * llt.solve(b);
  return VariationalDistribution::from_covariance(m, 0.5 * (S + S.transpose()));
}

} // namespace vof

#endif
