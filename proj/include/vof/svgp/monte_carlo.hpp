#ifndef VOF_SVGP_MONTE_CARLO_HPP
#define VOF_SVGP_MONTE_CARLO_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "vof/features/trig_vof.hpp"
#include "vof/svgp/bound.hpp"
#include "vof/svgp/variational.hpp"

namespace vof {

/*
 * One stratified set of T frequencies on [-a, a] with the feature weights
 * folded in: rows of `even` / `odd` hold
 *   (2 pi)^{-1/4} (2a / T) psi_m(w_t) sqrt(s(w_t))
 * for even / odd m (zero elsewhere), so Kuf_hat = even cos(w x^T) + odd sin(w x^T).
 */
struct SpectralSampleSet {
  Eigen::VectorXd omega;
  Eigen::MatrixXd even;
  Eigen::MatrixXd odd;
};

inline SpectralSampleSet make_sample_set(const TrigVOF &feat,
                                         const StratifiedSampler &sampler) {
  check_trig_sampler(feat, sampler);
  const auto nodes = stratified_draw(sampler);
  const int M = feat.size();
  const Eigen::Index T = static_cast<Eigen::Index>(nodes.size());
  SpectralSampleSet set{Eigen::VectorXd::Map(nodes.data(), T), Eigen::MatrixXd::Zero(M, T),
                        Eigen::MatrixXd::Zero(M, T)};
  const double weight = feature_normalizer() * sampler.width() / sampler.T;
  for (Eigen::Index t = 0; t < T; ++t) {
    const double w = nodes[t];
    const double scale = weight * std::sqrt(spectral_density(feat.kernel(), w));
    for (int m = 0; m < M; ++m) {
      (m % 2 == 0 ? set.even : set.odd)(m, t) = scale * feat.psi(m, w);
    }
  }
  return set;
}

inline Eigen::MatrixXd kuf_from_sample_set(const SpectralSampleSet &set,
                                           const Eigen::VectorXd &X) {
  const Eigen::MatrixXd phase = set.omega * X.transpose();
  return set.even * phase.array().cos().matrix() + set.odd * phase.array().sin().matrix();
}

// The two independent sets used by every Monte Carlo estimator.
struct SampleSetPair {
  SpectralSampleSet first;
  SpectralSampleSet second;
};

inline SampleSetPair make_sample_pair(const TrigVOF &feat, const StratifiedSampler &sampler) {
  return {make_sample_set(feat, sampler.split({0})), make_sample_set(feat, sampler.split({1}))};
}

/*
 * Unbiased marginal estimates from two independent sample sets:
 *   mu_hat   = (mu_1 + mu_2) / 2
 *   mu2_hat  = mu_1 mu_2
 *   var_hat  = k(x, x) + Kuf_1^T (S - I) Kuf_2
 * The means use c(w) = sum_{m even} m_m psi_m(w) and d(w) = sum_{m odd} m_m psi_m(w),
 * computed once per set. The variance contracts (S - I) against both sets
 * into T x T blocks and evaluates them per point with the shared samples.
 */
inline MarginalMoments mc_marginals_from_samples(const VariationalDistribution &q,
                                                 const SampleSetPair &pair,
                                                 const Eigen::VectorXd &X,
                                                 double prior_variance) {
  const auto &s1 = pair.first;
  const auto &s2 = pair.second;
  const Eigen::VectorXd &m = q.mean();

  const Eigen::MatrixXd phase1 = s1.omega * X.transpose();
  const Eigen::MatrixXd phase2 = s2.omega * X.transpose();
  const Eigen::MatrixXd cos1 = phase1.array().cos().matrix();
  const Eigen::MatrixXd sin1 = phase1.array().sin().matrix();
  const Eigen::MatrixXd cos2 = phase2.array().cos().matrix();
  const Eigen::MatrixXd sin2 = phase2.array().sin().matrix();

  const Eigen::VectorXd c1 = s1.even.transpose() * m;
  const Eigen::VectorXd d1 = s1.odd.transpose() * m;
  const Eigen::VectorXd c2 = s2.even.transpose() * m;
  const Eigen::VectorXd d2 = s2.odd.transpose() * m;
  const Eigen::VectorXd mu1 = cos1.transpose() * c1 + sin1.transpose() * d1;
  const Eigen::VectorXd mu2 = cos2.transpose() * c2 + sin2.transpose() * d2;

  // (S - I) applied to the second set
  Eigen::MatrixXd De;
  Eigen::MatrixXd Do;
  if (q.is_diagonal()) {
    const Eigen::VectorXd shift = q.variances().array() - 1.0;
    De = shift.asDiagonal() * s2.even;
    Do = shift.asDiagonal() * s2.odd;
  } else {
    const Eigen::MatrixXd &L = q.factor();
    De = L * (L.transpose() * s2.even) - s2.even;
    Do = L * (L.transpose() * s2.odd) - s2.odd;
  }
  // T x T blocks of Kuf_1^T (S - I) Kuf_2 split by parity
  const Eigen::MatrixXd Bee = s1.even.transpose() * De;
  const Eigen::MatrixXd Boo = s1.odd.transpose() * Do;
  Eigen::MatrixXd from_cos = Bee * cos2;
  Eigen::MatrixXd from_sin = Boo * sin2;
  if (!q.is_diagonal()) {
    // even/odd cross blocks vanish for diagonal S
    from_cos += (s1.even.transpose() * Do) * sin2;
    from_sin += (s1.odd.transpose() * De) * cos2;
  }
  Eigen::VectorXd variance = cos1.cwiseProduct(from_cos).colwise().sum().transpose() +
                             sin1.cwiseProduct(from_sin).colwise().sum().transpose();
  variance.array() += prior_variance;

  MarginalMoments out;
  out.mean = 0.5 * (mu1 + mu2);
  out.mean_square = mu1.cwiseProduct(mu2);
  out.variance = variance;
  out.provenance = {Provenance::Kind::MonteCarlo, static_cast<int>(s1.omega.size())};
  out.negative_variance_count = static_cast<int>((variance.array() < 0.0).count());
  return out;
}

} // namespace vof

#endif
