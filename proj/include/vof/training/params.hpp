#ifndef VOF_TRAINING_PARAMS_HPP
#define VOF_TRAINING_PARAMS_HPP

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vof/svgp.hpp"

namespace vof {

enum class Transform {
  Identity,
  Log,
  Softplus,
  // r = sqrt(l^2 / 2 + softplus(rho)) with l the current lengthscale
  HermiteR,
};

inline double softplus(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double softplus_inverse(double y) {
  if (!(y > 0.0)) {
    throw std::invalid_argument("softplus_inverse: argument must be > 0");
  }
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

// Which groups of parameters the optimizer may move.
struct TrainableFlags {
  bool variance = true;
  bool lengthscale = true;
  bool noise = true;
  bool feature = true;
  bool q = true;

  static TrainableFlags variational_only() { return {false, false, false, false, true}; }
  static TrainableFlags hyperparameters_only() { return {true, true, true, true, false}; }
};

struct ParamEntry {
  std::string name;
  Transform transform;
  bool trainable;
};

/*
 * Unconstrained coordinates of an SVGPModel. Fixed layout:
 *   variance, lengthscale, noise, feature parameter(s), m, S parameters.
 * Feature parameters are rho (Hermite), a (Trig), input_sd (eigenfunction)
 * or the inducing locations z_i. Dense S is stored through its Cholesky
 * factor with log diagonal, diagonal S through log variances.
 */
class ParamVector {
public:
  static ParamVector from_model(const SVGPModel &model, const TrainableFlags &flags = {}) {
    ParamVector out;
    const auto &kernel = model.kernel();
    const double l = kernel.lengthscale();
    out.push("variance", Transform::Log, flags.variance, std::log(kernel.variance()));
    out.push("lengthscale", Transform::Log, flags.lengthscale, std::log(l));
    out.push("noise", Transform::Log, flags.noise, std::log(model.noise_variance));
    std::visit(
        [&](const auto &feat) {
          using T = std::decay_t<decltype(feat)>;
          if constexpr (std::is_same_v<T, HermiteVOF>) {
            out.push("r", Transform::HermiteR, flags.feature,
                     softplus_inverse(feat.r() * feat.r() - 0.5 * l * l));
          } else if constexpr (std::is_same_v<T, TrigVOF>) {
            out.push("a", Transform::Log, flags.feature, std::log(feat.a()));
          } else if constexpr (std::is_same_v<T, EigenfunctionFeatures>) {
            out.push("input_sd", Transform::Log, flags.feature, std::log(feat.input_sd()));
          } else {
            for (Eigen::Index i = 0; i < feat.locations().size(); ++i) {
              out.push("z_" + std::to_string(i), Transform::Identity, flags.feature,
                       feat.locations()[i]);
            }
          }
        },
        model.features);
    out.q_offset_ = static_cast<int>(out.theta.size());
    const auto &q = model.q;
    const int M = q.size();
    for (int i = 0; i < M; ++i) {
      out.push("m_" + std::to_string(i), Transform::Identity, flags.q, q.mean()[i]);
    }
    if (q.is_diagonal()) {
      for (int i = 0; i < M; ++i) {
        out.push("s_" + std::to_string(i), Transform::Log, flags.q, std::log(q.variances()[i]));
      }
    } else {
      const Eigen::MatrixXd &L = q.factor();
      for (int i = 0; i < M; ++i) {
        for (int j = 0; j <= i; ++j) {
          const bool diag = i == j;
          out.push("L_" + std::to_string(i) + "_" + std::to_string(j),
                   diag ? Transform::Log : Transform::Identity, flags.q,
                   diag ? std::log(L(i, i)) : L(i, j));
        }
      }
    }
    out.structure_ = q.structure();
    out.M_ = M;
    return out;
  }

  // Rebuilds a model of the same shape as `tmpl` from theta.
  SVGPModel to_model(const SVGPModel &tmpl) const {
    const double v = std::exp(theta[0]);
    const double l = std::exp(theta[1]);
    const double noise = std::exp(theta[2]);
    const KernelParams kernel(tmpl.kernel().family(), v, l);
    FeatureFamily features = std::visit(
        [&](const auto &feat) -> FeatureFamily {
          using T = std::decay_t<decltype(feat)>;
          if constexpr (std::is_same_v<T, HermiteVOF>) {
            return HermiteVOF(feat.size(), std::sqrt(0.5 * l * l + softplus(theta[3])), kernel);
          } else if constexpr (std::is_same_v<T, TrigVOF>) {
            return TrigVOF(feat.size(), std::exp(theta[3]), kernel);
          } else if constexpr (std::is_same_v<T, EigenfunctionFeatures>) {
            return EigenfunctionFeatures(feat.size(), std::exp(theta[3]), kernel);
          } else {
            return InducingPoints(theta.segment(3, feat.size()), kernel, feat.jitter());
          }
        },
        tmpl.features);
    return SVGPModel(std::move(features), variational(), noise);
  }

  VariationalDistribution variational() const {
    const Eigen::VectorXd m = theta.segment(q_offset_, M_);
    Eigen::Index k = q_offset_ + M_;
    if (structure_ == VariationalDistribution::Structure::Diagonal) {
      return VariationalDistribution::diagonal(m, theta.segment(k, M_).array().exp());
    }
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(M_, M_);
    for (int i = 0; i < M_; ++i) {
      for (int j = 0; j <= i; ++j) {
        L(i, j) = i == j ? std::exp(theta[k]) : theta[k];
        ++k;
      }
    }
    return VariationalDistribution::dense(m, L);
  }

  Eigen::Index size() const { return theta.size(); }
  int q_offset() const { return q_offset_; }
  int q_size() const { return static_cast<int>(theta.size()) - q_offset_; }

  int index_of(const std::string &name) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].name == name) {
        return static_cast<int>(i);
      }
    }
    throw std::invalid_argument("ParamVector: no parameter named '" + name + "'");
  }

  std::vector<int> free_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].trainable) {
        out.push_back(static_cast<int>(i));
      }
    }
    return out;
  }

  Eigen::VectorXd free() const {
    const auto idx = free_indices();
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = theta[idx[i]];
    }
    return out;
  }

  ParamVector with_free(const Eigen::VectorXd &values) const {
    const auto idx = free_indices();
    if (values.size() != static_cast<Eigen::Index>(idx.size())) {
      throw std::invalid_argument("ParamVector: free vector has the wrong length");
    }
    ParamVector out = *this;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.theta[idx[i]] = values[static_cast<Eigen::Index>(i)];
    }
    return out;
  }

  double constrained(int i) const {
    switch (entries[i].transform) {
    case Transform::Identity:
      return theta[i];
    case Transform::Log:
      return std::exp(theta[i]);
    case Transform::Softplus:
      return softplus(theta[i]);
    case Transform::HermiteR: {
      const double l = std::exp(theta[1]);
      return std::sqrt(0.5 * l * l + softplus(theta[i]));
    }
    }
    return theta[i];
  }

  // Sets entry `name` to a constrained value.
  void set_constrained(const std::string &name, double value) {
    const int i = index_of(name);
    switch (entries[i].transform) {
    case Transform::Identity:
      theta[i] = value;
      break;
    case Transform::Log:
      theta[i] = std::log(value);
      break;
    case Transform::Softplus:
      theta[i] = softplus_inverse(value);
      break;
    case Transform::HermiteR: {
      const double l = std::exp(theta[1]);
      const double excess = value * value - 0.5 * l * l;
      if (!(excess > 0.0)) {
        throw ConstraintViolated("ParamVector: r must satisfy 2 r^2 > l^2");
      }
      theta[i] = softplus_inverse(excess);
      break;
    }
    }
  }

  // One "name = value" line per hyperparameter and feature parameter, then
  // summary norms of the variational block.
  std::string dump() const {
    std::string out;
    char buf[128];
    for (int i = 0; i < q_offset_; ++i) {
      std::snprintf(buf, sizeof buf, "%s = %.17g (theta %.17g)\n", entries[i].name.c_str(),
                    constrained(i), theta[i]);
      out += buf;
    }
    const Eigen::VectorXd qpart = theta.segment(q_offset_, q_size());
    std::snprintf(buf, sizeof buf, "q: %d parameters, max |theta| = %.17g, finite = %s\n",
                  q_size(), qpart.size() ? qpart.cwiseAbs().maxCoeff() : 0.0,
                  qpart.allFinite() ? "yes" : "no");
    out += buf;
    return out;
  }

  Eigen::VectorXd theta;
  std::vector<ParamEntry> entries;

private:
  void push(std::string name, Transform transform, bool trainable, double value) {
    entries.push_back({std::move(name), transform, trainable});
    theta.conservativeResize(theta.size() + 1);
    theta[theta.size() - 1] = value;
  }

  int q_offset_ = 0;
  int M_ = 0;
  VariationalDistribution::Structure structure_ = VariationalDistribution::Structure::Dense;
};

} // namespace vof

#endif
