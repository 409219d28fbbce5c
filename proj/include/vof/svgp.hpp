#ifndef VOF_SVGP_HPP
#define VOF_SVGP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vof/features.hpp"
#include "vof/inputs.hpp"
#include "vof/svgp/bound.hpp"
#include "vof/svgp/monte_carlo.hpp"
#include "vof/svgp/variational.hpp"

namespace vof {

// Kernel, features, q(u) and Gaussian noise variance. The kernel is owned
// by the feature family.
struct SVGPModel {
  FeatureFamily features;
  VariationalDistribution q;
  double noise_variance;

  SVGPModel(FeatureFamily features_, VariationalDistribution q_, double noise_variance_)
      : features(std::move(features_)), q(std::move(q_)), noise_variance(noise_variance_) {
    if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
      throw std::invalid_argument("SVGPModel: noise variance must be > 0");
    }
    if (q.size() != feature_count(features)) {
      throw std::invalid_argument("SVGPModel: q size does not match the feature count");
    }
  }

  // Prior q(u) = p(u).
  static SVGPModel with_prior(FeatureFamily features, double noise_variance,
                              VariationalDistribution::Structure structure =
                                  VariationalDistribution::Structure::Dense) {
    auto q = VariationalDistribution::prior(vof::kuu(features), structure);
    return SVGPModel(std::move(features), std::move(q), noise_variance);
  }

  const KernelParams &kernel() const { return feature_kernel(features); }
  int size() const { return q.size(); }

  SVGPModel with_q(VariationalDistribution q_) const {
    return SVGPModel(features, std::move(q_), noise_variance);
  }
};

inline Eigen::VectorXd prior_variance_vector(const KernelParams &kernel, Eigen::Index n) {
  return Eigen::VectorXd::Constant(n, kernel.variance());
}

// Analytic q(f) marginals; needs a closed-form Kuf.
inline MarginalMoments qf_marginals(const SVGPModel &model, const Eigen::VectorXd &X) {
  const Eigen::MatrixXd K = exact_kuf(model.features, X);
  return marginals_from_kuf(model.q, kuu(model.features), K,
                            prior_variance_vector(model.kernel(), X.size()));
}

inline double kl_to_prior(const SVGPModel &model) {
  return kl_to_prior(model.q, kuu(model.features));
}

inline double elbo_gaussian(const SVGPModel &model, const Eigen::VectorXd &X,
                            const Eigen::VectorXd &y) {
  const auto moments = qf_marginals(model, X);
  return gaussian_expected_log_likelihood(y, moments, model.noise_variance) -
         kl_to_prior(model);
}

// ELBO with Kuf supplied by quadrature, for families without a closed form.
inline double elbo_gaussian(const SVGPModel &model, const Eigen::VectorXd &X,
                            const Eigen::VectorXd &y, const QuadratureSpec &quad) {
  const Eigen::MatrixXd K = spectral_kuf(model.features, X, quad);
  return elbo_from_kuf(model.q, kuu(model.features), K,
                       prior_variance_vector(model.kernel(), X.size()), y,
                       model.noise_variance);
}

inline VariationalDistribution
optimal_q_gaussian(const SVGPModel &model, const Eigen::VectorXd &X, const Eigen::VectorXd &y,
                   VariationalDistribution::Structure structure =
                       VariationalDistribution::Structure::Dense) {
  return optimal_q_from_kuf(exact_kuf(model.features, X), y, model.noise_variance,
                            kuu(model.features), structure);
}

// ELBO at the optimal q of the given structure.
inline double collapsed_elbo(const SVGPModel &model, const Eigen::VectorXd &X,
                             const Eigen::VectorXd &y,
                             VariationalDistribution::Structure structure =
                                 VariationalDistribution::Structure::Dense) {
  const Eigen::MatrixXd K = exact_kuf(model.features, X);
  const KuuDescriptor Kuu = kuu(model.features);
  const auto q = optimal_q_from_kuf(K, y, model.noise_variance, Kuu, structure);
  return elbo_from_kuf(q, Kuu, K, prior_variance_vector(model.kernel(), X.size()), y,
                       model.noise_variance);
}

/*
 * Off-diagonal ratio max_{m != m'} |N S*_{mm'}| / min_m |N S*_{mm}| of the
 * optimal covariance, which only depends on the inputs.
 */
inline double offdiagonal_ratio(const Eigen::MatrixXd &S, double N) {
  const Eigen::Index M = S.rows();
  if (M < 2) {
    return 0.0;
  }
  double off = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) {
    for (Eigen::Index j = 0; j < M; ++j) {
      if (i != j) {
        off = std::max(off, std::abs(N * S(i, j)));
      }
    }
  }
  return off / (N * S.diagonal().cwiseAbs().minCoeff());
}

struct MeanFieldTemplate {
  FeatureFamily features;
  double noise_variance;
  InputDistribution inputs;
};

struct MeanFieldRow {
  int N;
  double offdiag_ratio;
};

inline std::vector<MeanFieldRow> meanfield_diagonality_profile(const MeanFieldTemplate &tmpl,
                                                               const std::vector<int> &Ns,
                                                               std::uint64_t seed) {
  std::vector<MeanFieldRow> rows;
  const KuuDescriptor Kuu = kuu(tmpl.features);
  for (int N : Ns) {
    const Eigen::VectorXd X =
        generate_inputs(tmpl.inputs, N, derive_seed(seed, {static_cast<std::uint64_t>(N)}));
    const Eigen::MatrixXd K = exact_kuf(tmpl.features, X);
    const auto q = optimal_q_from_kuf(K, Eigen::VectorXd::Zero(N), tmpl.noise_variance, Kuu);
    rows.push_back({N, offdiagonal_ratio(q.covariance(), N)});
  }
  return rows;
}

// Unbiased Monte Carlo marginals for TrigVOF models.
inline MarginalMoments mc_qf_marginals(const SVGPModel &model, const Eigen::VectorXd &X,
                                       const StratifiedSampler &sampler) {
  const auto *trig = std::get_if<TrigVOF>(&model.features);
  if (trig == nullptr) {
    throw std::invalid_argument("mc_qf_marginals: TrigVOF features required");
  }
  const auto pair = make_sample_pair(*trig, sampler);
  return mc_marginals_from_samples(model.q, pair, X, model.kernel().variance());
}

/*
 * Unbiased ELBO estimate. For a minibatch of a data set of size full_size
 * the likelihood sum is rescaled by full_size / batch size.
 */
inline double mc_elbo_gaussian(const SVGPModel &model, const Eigen::VectorXd &X,
                               const Eigen::VectorXd &y, const StratifiedSampler &sampler,
                               std::optional<Eigen::Index> full_size = std::nullopt) {
  const auto moments = mc_qf_marginals(model, X, sampler);
  const double scale =
      full_size ? static_cast<double>(*full_size) / static_cast<double>(X.size()) : 1.0;
  return scale * gaussian_expected_log_likelihood(y, moments, model.noise_variance) -
         kl_to_prior(model);
}

/*
 * Deterministic predictive marginals. Closed-form families are evaluated
 * exactly; TrigVOF uses quadrature Kuf (Gauss-Legendre or adaptive on
 * [-a, a]). Variances are clamped to [0, k(x, x)] and the clamps counted.
 */
inline MarginalMoments predict(const SVGPModel &model, const Eigen::VectorXd &X,
                               const QuadratureSpec &quad) {
  MarginalMoments out;
  if (has_exact_kuf(model.features)) {
    out = qf_marginals(model, X);
  } else {
    if (quad.scheme == QuadratureSpec::Scheme::GaussHermite) {
      throw std::invalid_argument(
          "predict: Gauss-Hermite cannot integrate band-limited features");
    }
    const Eigen::MatrixXd K = spectral_kuf(model.features, X, quad);
    out = marginals_from_kuf(model.q, kuu(model.features), K,
                             prior_variance_vector(model.kernel(), X.size()));
    out.provenance = quad.scheme == QuadratureSpec::Scheme::GaussLegendre
                         ? Provenance{Provenance::Kind::GaussLegendre, quad.order}
                         : Provenance{Provenance::Kind::Adaptive, 0};
  }
  const double v = model.kernel().variance();
  for (Eigen::Index n = 0; n < out.variance.size(); ++n) {
    if (out.variance[n] < 0.0 || out.variance[n] > v) {
      out.variance[n] = std::clamp(out.variance[n], 0.0, v);
      ++out.clamped_count;
    }
  }
  return out;
}

} // namespace vof

#endif
