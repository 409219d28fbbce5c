#ifndef VOF_INPUTS_HPP
#define VOF_INPUTS_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vof/numerics/random.hpp"

namespace vof {

// Distribution of the covariates x used by the data generators.
struct InputDistribution {
  enum class Kind { Gaussian, Uniform, Mixture };

  Kind kind = Kind::Gaussian;
  double sd = 1.0;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;

  static InputDistribution gaussian(double sd) {
    InputDistribution d;
    d.kind = Kind::Gaussian;
    d.sd = sd;
    d.validate();
    return d;
  }

  static InputDistribution uniform(double lo, double hi) {
    InputDistribution d;
    d.kind = Kind::Uniform;
    d.lo = lo;
    d.hi = hi;
    d.validate();
    return d;
  }

  static InputDistribution mixture(std::vector<double> weights, std::vector<double> means,
                                   std::vector<double> sds) {
    InputDistribution d;
    d.kind = Kind::Mixture;
    d.weights = std::move(weights);
    d.means = std::move(means);
    d.sds = std::move(sds);
    d.validate();
    return d;
  }

  /*
   * Two components with weights 0.7 / 0.3 and variances 1 / 0.5, means
   * placed so the mixture has mean 0 and standard deviation target_sd.
   */
  static InputDistribution standardized_bimodal(double target_sd = 3.0) {
    const double w1 = 0.7;
    const double w2 = 0.3;
    const double v1 = 1.0;
    const double v2 = 0.5;
    // w1 mu1 + w2 mu2 = 0 with mu2 = -(w1 / w2) mu1
    const double ratio = w1 / w2;
    const double spread = target_sd * target_sd - (w1 * v1 + w2 * v2);
    if (!(spread > 0.0)) {
      throw std::invalid_argument("standardized_bimodal: target sd too small");
    }
    const double mu1 = std::sqrt(spread / (w1 + w2 * ratio * ratio));
    return mixture({w1, w2}, {mu1, -ratio * mu1}, {std::sqrt(v1), std::sqrt(v2)});
  }

  void validate() const {
    switch (kind) {
    case Kind::Gaussian:
      if (!(sd > 0.0)) {
        throw std::invalid_argument("InputDistribution: sd must be > 0");
      }
      break;
    case Kind::Uniform:
      if (!(hi > lo)) {
        throw std::invalid_argument("InputDistribution: empty uniform interval");
      }
      break;
    case Kind::Mixture: {
      if (weights.empty() || weights.size() != means.size() || weights.size() != sds.size()) {
        throw std::invalid_argument("InputDistribution: mixture component mismatch");
      }
      double total = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0) || !(sds[i] > 0.0)) {
          throw std::invalid_argument("InputDistribution: mixture weights and sds must be > 0");
        }
        total += weights[i];
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("InputDistribution: mixture weights must sum to 1");
      }
      break;
    }
    }
  }

  double mean() const {
    switch (kind) {
    case Kind::Gaussian:
      return 0.0;
    case Kind::Uniform:
      return 0.5 * (lo + hi);
    case Kind::Mixture:
      return std::inner_product(weights.begin(), weights.end(), means.begin(), 0.0);
    }
    return 0.0;
  }

  double standard_deviation() const {
    switch (kind) {
    case Kind::Gaussian:
      return sd;
    case Kind::Uniform:
      return (hi - lo) / std::sqrt(12.0);
    case Kind::Mixture: {
      const double mu = mean();
      double second = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        second += weights[i] * (sds[i] * sds[i] + means[i] * means[i]);
      }
      return std::sqrt(second - mu * mu);
    }
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
    case Kind::Gaussian:
      return "gaussian";
    case Kind::Uniform:
      return "uniform";
    case Kind::Mixture:
      return "mixture";
    }
    return "unknown";
  }

  bool operator==(const InputDistribution &) const = default;
};

inline Eigen::VectorXd generate_inputs(const InputDistribution &dist, int N,
                                       std::uint64_t seed) {
  if (N < 0) {
    throw std::invalid_argument("generate_inputs: N must be >= 0");
  }
  dist.validate();
  RandomStream stream(seed);
  Eigen::VectorXd X(N);
  for (int n = 0; n < N; ++n) {
    switch (dist.kind) {
    case InputDistribution::Kind::Gaussian:
      X[n] = dist.sd * stream.normal();
      break;
    case InputDistribution::Kind::Uniform:
      X[n] = stream.uniform(dist.lo, dist.hi);
      break;
    case InputDistribution::Kind::Mixture: {
      double u = stream.uniform();
      std::size_t c = 0;
      while (c + 1 < dist.weights.size() && u >= dist.weights[c]) {
        u -= dist.weights[c];
        ++c;
      }
      X[n] = dist.means[c] + dist.sds[c] * stream.normal();
      break;
    }
    }
  }
  return X;
}

} // namespace vof

#endif
