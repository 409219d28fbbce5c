#ifndef VOF_EXACT_GP_HPP
#define VOF_EXACT_GP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>

#include <Eigen/Dense>

#include "vof/errors.hpp"
#include "vof/kernels.hpp"
#include "vof/numerics/random.hpp"

namespace vof {

namespace detail {

// Cholesky of A + jitter I; on failure retries once with jitter 100x the
// kernel default, then throws.
inline Eigen::LLT<Eigen::MatrixXd> robust_cholesky(Eigen::MatrixXd A, double jitter,
                                                   const KernelParams &kernel,
                                                   const char *what) {
  A.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    return llt;
  }
  A.diagonal().array() += 100.0 * default_jitter(kernel);
  llt.compute(A);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite(std::string(what) + ": Cholesky failed after jitter retry");
  }
  return llt;
}

} // namespace detail

// log N(y; 0, Kff + noise I)
inline double exact_lml(const KernelParams &kernel, const Eigen::VectorXd &X,
                        const Eigen::VectorXd &y, double noise_variance) {
  if (X.size() != y.size()) {
    throw std::invalid_argument("exact_lml: X and y differ in length");
  }
  if (!(noise_variance > 0.0)) {
    throw std::invalid_argument("exact_lml: noise variance must be > 0");
  }
  const auto llt = detail::robust_cholesky(kernel_matrix(kernel, X, 0.0).entries,
                                           noise_variance, kernel, "exact_lml");
  const Eigen::VectorXd half = llt.matrixL().solve(y);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * half.squaredNorm() - 0.5 * logdet -
         0.5 * static_cast<double>(X.size()) * std::log(2.0 * std::numbers::pi);
}

class ExactPosterior {
public:
  static ExactPosterior fit(const KernelParams &kernel, const Eigen::VectorXd &X,
                            const Eigen::VectorXd &y, double noise_variance) {
    if (X.size() != y.size()) {
      throw std::invalid_argument("ExactPosterior: X and y differ in length");
    }
    if (!(noise_variance > 0.0)) {
      throw std::invalid_argument("ExactPosterior: noise variance must be > 0");
    }
    auto llt = detail::robust_cholesky(kernel_matrix(kernel, X, 0.0).entries, noise_variance,
                                       kernel, "ExactPosterior");
    Eigen::VectorXd alpha = llt.solve(y);
    return ExactPosterior(kernel, X, std::move(alpha), std::move(llt), noise_variance);
  }

  // Predictive mean and latent variance of f(x*).
  std::pair<double, double> predict(double x) const {
    Eigen::VectorXd k(X_.size());
    for (Eigen::Index n = 0; n < X_.size(); ++n) {
      k[n] = kernel_eval(kernel_, x, X_[n]);
    }
    const double mean = k.dot(alpha_);
    const Eigen::VectorXd half = chol_.matrixL().solve(k);
    const double prior = kernel_.variance();
    const double variance = std::clamp(prior - half.squaredNorm(), 1e-300, prior);
    return {mean, variance};
  }

  std::pair<Eigen::VectorXd, Eigen::VectorXd> predict(const Eigen::VectorXd &Xs) const {
    Eigen::VectorXd mean(Xs.size());
    Eigen::VectorXd variance(Xs.size());
    for (Eigen::Index i = 0; i < Xs.size(); ++i) {
      std::tie(mean[i], variance[i]) = predict(Xs[i]);
    }
    return {mean, variance};
  }

  // log N(y*; mean, variance + noise)
  double log_predictive_density(double x, double y) const {
    const auto [mean, variance] = predict(x);
    const double total = variance + noise_variance_;
    const double r = y - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * total) - 0.5 * r * r / total;
  }

  const Eigen::VectorXd &inputs() const { return X_; }
  const Eigen::VectorXd &alpha() const { return alpha_; }
  Eigen::MatrixXd cholesky_factor() const { return chol_.matrixL(); }
  const KernelParams &kernel() const { return kernel_; }
  double noise_variance() const { return noise_variance_; }

private:
  ExactPosterior(const KernelParams &kernel, Eigen::VectorXd X, Eigen::VectorXd alpha,
                 Eigen::LLT<Eigen::MatrixXd> chol, double noise_variance)
      : kernel_(kernel), X_(std::move(X)), alpha_(std::move(alpha)), chol_(std::move(chol)),
        noise_variance_(noise_variance) {}

  KernelParams kernel_;
  Eigen::VectorXd X_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  double noise_variance_;
};

inline std::pair<double, double> exact_posterior_predict(const ExactPosterior &post, double x) {
  return post.predict(x);
}

// y = L eps + sigma eps', L the Cholesky factor of Kff + 1e-8 v I.
inline Eigen::VectorXd sample_prior(const KernelParams &kernel, const Eigen::VectorXd &X,
                                    double noise_variance, std::uint64_t seed) {
  if (!(noise_variance >= 0.0)) {
    throw std::invalid_argument("sample_prior: noise variance must be >= 0");
  }
  const auto llt = detail::robust_cholesky(kernel_matrix(kernel, X, 0.0).entries,
                                           default_jitter(kernel), kernel, "sample_prior");
  RandomStream latent(derive_seed(seed, {0}));
  RandomStream noise(derive_seed(seed, {1}));
  Eigen::VectorXd eps(X.size());
  Eigen::VectorXd eps_noise(X.size());
  for (Eigen::Index n = 0; n < X.size(); ++n) {
    eps[n] = latent.normal();
    eps_noise[n] = noise.normal();
  }
  return llt.matrixL() * eps + std::sqrt(noise_variance) * eps_noise;
}

} // namespace vof

#endif
