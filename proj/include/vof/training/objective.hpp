#ifndef VOF_TRAINING_OBJECTIVE_HPP
#define VOF_TRAINING_OBJECTIVE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "vof/errors.hpp"
#include "vof/svgp.hpp"
#include "vof/training/params.hpp"

namespace vof {

enum class ObjectiveKind { AnalyticELBO, CollapsedELBO, MCELBO };

inline std::string to_string(ObjectiveKind kind) {
  switch (kind) {
  case ObjectiveKind::AnalyticELBO:
    return "analytic";
  case ObjectiveKind::CollapsedELBO:
    return "collapsed";
  case ObjectiveKind::MCELBO:
    return "mc";
  }
  return "unknown";
}

inline ObjectiveKind objective_kind_from_string(std::string_view name) {
  if (name == "analytic") {
    return ObjectiveKind::AnalyticELBO;
  }
  if (name == "collapsed") {
    return ObjectiveKind::CollapsedELBO;
  }
  if (name == "mc") {
    return ObjectiveKind::MCELBO;
  }
  throw std::invalid_argument("unknown objective '" + std::string(name) + "'");
}

enum class GradientMode { FiniteDifference, Supplied };

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::AnalyticELBO;
  // frequencies per sample set for MCELBO
  int mc_samples = 50;
  TrainableFlags trainable;
};

// Central differences; throws NonFiniteObjective on a non-finite evaluation.
inline Eigen::VectorXd
finite_difference_gradient(const std::function<double(const Eigen::VectorXd &)> &f,
                           const Eigen::VectorXd &theta, double h = 1e-5) {
  Eigen::VectorXd grad(theta.size());
  Eigen::VectorXd probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = f(probe);
    probe[i] = theta[i] - h;
    const double down = f(probe);
    probe[i] = theta[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NonFiniteObjective("finite_difference_gradient: non-finite value at coordinate " +
                               std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

/*
 * Gradient of
 *   scale * sum_n E[log N(y_n | f_n, s2)] - KL(q || p),   Kuu = I,
 * in the q coordinates of ParamVector (m, then log s or the Cholesky factor
 * with log diagonal). The marginals are the two-set estimates
 *   mu = (K1^T m + K2^T m) / 2,  mu^2 = (K1^T m)(K2^T m),
 *   var = k + diag(K1^T (S - I) K2);
 * K1 = K2 gives the analytic bound.
 */
inline Eigen::VectorXd elbo_q_gradient(const VariationalDistribution &q, const Eigen::MatrixXd &K1,
                                       const Eigen::MatrixXd &K2, const Eigen::VectorXd &y,
                                       double noise_variance, double scale) {
  const int M = q.size();
  const Eigen::VectorXd &m = q.mean();
  const Eigen::VectorXd mu1 = K1.transpose() * m;
  const Eigen::VectorXd mu2 = K2.transpose() * m;
  const double c = scale / (2.0 * noise_variance);
  const Eigen::VectorXd dm = c * (K1 * (y - mu2) + K2 * (y - mu1)) - m;

  const int nS = q.is_diagonal() ? M : M * (M + 1) / 2;
  Eigen::VectorXd grad(M + nS);
  grad.head(M) = dm;
  if (q.is_diagonal()) {
    const Eigen::VectorXd s = q.variances();
    const Eigen::VectorXd lik = -c * K1.cwiseProduct(K2).rowwise().sum();
    const Eigen::VectorXd dS = lik.array() - 0.5 * (1.0 - s.array().inverse());
    grad.tail(M) = dS.cwiseProduct(s);
    return grad;
  }
  const Eigen::MatrixXd &L = q.factor();
  Eigen::MatrixXd G = -c * K1 * K2.transpose();
  G = 0.5 * (G + G.transpose());
  const Eigen::MatrixXd Linv =
      L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(M, M));
  const Eigen::MatrixXd Sinv = Linv.transpose() * Linv;
  G -= 0.5 * (Eigen::MatrixXd::Identity(M, M) - Sinv);
  const Eigen::MatrixXd dL = 2.0 * G * L;
  Eigen::Index k = M;
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j <= i; ++j) {
      grad[k++] = i == j ? dL(i, i) * L(i, i) : dL(i, j);
    }
  }
  return grad;
}

/*
 * ELBO as a function of the free coordinates of a ParamVector. `step`
 * selects the Monte Carlo frequencies and the minibatch, so every
 * evaluation inside one optimizer step sees the same random numbers.
 */
class ElboObjective {
public:
  ElboObjective(SVGPModel tmpl, Eigen::VectorXd X, Eigen::VectorXd y, const ObjectiveSpec &spec,
                int minibatch = 0, std::uint64_t seed = 0)
      : tmpl_(std::move(tmpl)), X_(std::move(X)), y_(std::move(y)), spec_(spec),
        minibatch_(minibatch), seed_(seed) {
    if (X_.size() != y_.size()) {
      throw std::invalid_argument("ElboObjective: X and y differ in length");
    }
    const bool trig = std::holds_alternative<TrigVOF>(tmpl_.features);
    if (spec_.kind == ObjectiveKind::MCELBO && !trig) {
      throw std::invalid_argument("ElboObjective: the Monte Carlo objective needs TrigVOF");
    }
    if (spec_.kind != ObjectiveKind::MCELBO && trig) {
      throw std::invalid_argument("ElboObjective: TrigVOF needs the Monte Carlo objective");
    }
    if (spec_.kind == ObjectiveKind::CollapsedELBO) {
      if (minibatch_ > 0) {
        throw std::invalid_argument("ElboObjective: the collapsed bound is full batch");
      }
      spec_.trainable.q = false;
    }
    if (minibatch_ < 0) {
      throw std::invalid_argument("ElboObjective: minibatch must be >= 0");
    }
    initial_ = ParamVector::from_model(tmpl_, spec_.trainable);
  }

  const ParamVector &initial() const { return initial_; }
  const ObjectiveSpec &spec() const { return spec_; }
  const SVGPModel &model_template() const { return tmpl_; }

  // Model at `free`; the collapsed objective substitutes its optimal q.
  SVGPModel model(const Eigen::VectorXd &free) const {
    return model_from(initial_.with_free(free));
  }

  SVGPModel model_from(const ParamVector &params) const {
    SVGPModel model = params.to_model(tmpl_);
    if (spec_.kind == ObjectiveKind::CollapsedELBO) {
      model.q = optimal_q_gaussian(model, X_, y_, tmpl_.q.structure());
    }
    return model;
  }

  double value(const Eigen::VectorXd &free, std::uint64_t step) const {
    return evaluate(initial_.with_free(free), step, nullptr);
  }

  double value_of(const ParamVector &params, std::uint64_t step) const {
    return evaluate(params, step, nullptr);
  }

  double value_and_gradient(const Eigen::VectorXd &free, std::uint64_t step, GradientMode mode,
                            double h, Eigen::VectorXd &grad) const {
    const ParamVector params = initial_.with_free(free);
    const auto idx = params.free_indices();
    const bool supplied = mode == GradientMode::Supplied && spec_.kind != ObjectiveKind::CollapsedELBO &&
                          kuu(tmpl_.features).is_identity();
    Eigen::VectorXd qgrad;
    const double f = evaluate(params, step, supplied ? &qgrad : nullptr);
    grad.resize(free.size());
    Eigen::VectorXd probe = free;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (supplied && idx[i] >= params.q_offset()) {
        grad[k] = qgrad[idx[i] - params.q_offset()];
        continue;
      }
      probe[k] = free[k] + h;
      const double up = value(probe, step);
      probe[k] = free[k] - h;
      const double down = value(probe, step);
      probe[k] = free[k];
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NonFiniteObjective("objective is not finite near\n" + params.dump());
      }
      grad[k] = (up - down) / (2.0 * h);
    }
    return f;
  }

private:
  struct Batch {
    Eigen::VectorXd X;
    Eigen::VectorXd y;
    double scale;
  };

  Batch batch(std::uint64_t step) const {
    const Eigen::Index N = X_.size();
    if (minibatch_ == 0 || minibatch_ >= N) {
      return {X_, y_, 1.0};
    }
    RandomStream stream(derive_seed(seed_, {step, 1}));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Batch out{Eigen::VectorXd(minibatch_), Eigen::VectorXd(minibatch_),
              static_cast<double>(N) / minibatch_};
    for (int i = 0; i < minibatch_; ++i) {
      const auto j = i + static_cast<std::size_t>(stream.index(static_cast<std::size_t>(N - i)));
      std::swap(order[static_cast<std::size_t>(i)], order[j]);
      out.X[i] = X_[order[static_cast<std::size_t>(i)]];
      out.y[i] = y_[order[static_cast<std::size_t>(i)]];
    }
    return out;
  }

  double evaluate(const ParamVector &params, std::uint64_t step, Eigen::VectorXd *qgrad) const {
    double f = 0.0;
    if (!params.theta.allFinite()) {
      throw NonFiniteObjective("objective parameters are not finite\n" + params.dump());
    }
    const SVGPModel model = params.to_model(tmpl_);
    switch (spec_.kind) {
    case ObjectiveKind::CollapsedELBO:
      f = collapsed_elbo(model, X_, y_, tmpl_.q.structure());
      break;
    case ObjectiveKind::AnalyticELBO: {
      const Batch b = batch(step);
      const Eigen::MatrixXd K = exact_kuf(model.features, b.X);
      f = elbo_from_kuf(model.q, kuu(model.features), K,
                        prior_variance_vector(model.kernel(), b.X.size()), b.y,
                        model.noise_variance, b.scale);
      if (qgrad != nullptr) {
        *qgrad = elbo_q_gradient(model.q, K, K, b.y, model.noise_variance, b.scale);
      }
      break;
    }
    case ObjectiveKind::MCELBO: {
      const Batch b = batch(step);
      const auto &trig = std::get<TrigVOF>(model.features);
      const StratifiedSampler sampler(spec_.mc_samples, derive_seed(seed_, {step, 0}),
                                      -trig.a(), trig.a());
      const auto pair = make_sample_pair(trig, sampler);
      const auto moments = mc_marginals_from_samples(model.q, pair, b.X, model.kernel().variance());
      f = b.scale * gaussian_expected_log_likelihood(b.y, moments, model.noise_variance) -
          kl_to_prior(model.q, kuu(model.features));
      if (qgrad != nullptr) {
        *qgrad = elbo_q_gradient(model.q, kuf_from_sample_set(pair.first, b.X),
                                 kuf_from_sample_set(pair.second, b.X), b.y,
                                 model.noise_variance, b.scale);
      }
      break;
    }
    }
    if (!std::isfinite(f)) {
      throw NonFiniteObjective("objective is not finite at\n" + params.dump());
    }
    return f;
  }

  SVGPModel tmpl_;
  Eigen::VectorXd X_;
  Eigen::VectorXd y_;
  ObjectiveSpec spec_;
  int minibatch_;
  std::uint64_t seed_;
  ParamVector initial_;
};

} // namespace vof

#endif
