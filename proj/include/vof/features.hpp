#ifndef VOF_FEATURES_HPP
#define VOF_FEATURES_HPP

#include <string>
#include <type_traits>
#include <variant>

#include <Eigen/Dense>

#include "vof/errors.hpp"
#include "vof/features/eigenfunction.hpp"
#include "vof/features/hermite_vof.hpp"
#include "vof/features/inducing_points.hpp"
#include "vof/features/kuu.hpp"
#include "vof/features/spectral.hpp"
#include "vof/features/trig_vof.hpp"

namespace vof {

using FeatureFamily =
    std::variant<HermiteVOF, TrigVOF, EigenfunctionFeatures, InducingPoints>;

inline std::string family_name(const FeatureFamily &feat) {
  return std::visit(
      [](const auto &f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, HermiteVOF>) {
          return "hermite";
        } else if constexpr (std::is_same_v<T, TrigVOF>) {
          return "trig";
        } else if constexpr (std::is_same_v<T, EigenfunctionFeatures>) {
          return "eigenfunction";
        } else {
          return "inducing_points";
        }
      },
      feat);
}

inline int feature_count(const FeatureFamily &feat) {
  return std::visit([](const auto &f) { return f.size(); }, feat);
}

inline const KernelParams &feature_kernel(const FeatureFamily &feat) {
  return std::visit([](const auto &f) -> const KernelParams & { return f.kernel(); },
                    feat);
}

inline FeatureFamily with_kernel(const FeatureFamily &feat, const KernelParams &kernel) {
  return std::visit(
      [&](const auto &f) -> FeatureFamily {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, EigenfunctionFeatures>) {
          return EigenfunctionFeatures(f.size(), f.input_sd(), kernel);
        } else {
          return f.with_kernel(kernel);
        }
      },
      feat);
}

inline KuuDescriptor kuu(const FeatureFamily &feat) {
  return std::visit([](const auto &f) { return f.kuu(); }, feat);
}

inline bool has_exact_kuf(const FeatureFamily &feat) {
  return !std::holds_alternative<TrigVOF>(feat);
}

inline Eigen::MatrixXd exact_kuf(const FeatureFamily &feat, const Eigen::VectorXd &X) {
  return std::visit(
      [&](const auto &f) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TrigVOF>) {
          throw RequiresMonteCarlo(
              "TrigVOF has no closed-form Kuf; use quadrature or Monte Carlo");
        } else {
          return f.kuf(X);
        }
      },
      feat);
}

// Quadrature Kuf for the spectral families. Gauss-Hermite rules apply to
// Hermite features, Gauss-Legendre rules to the band-limited Trig features.
inline Eigen::MatrixXd spectral_kuf(const FeatureFamily &feat, const Eigen::VectorXd &X,
                                    const QuadratureSpec &quad) {
  return std::visit(
      [&](const auto &f) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(f)>;
        if constexpr (SpectralFamily<T>) {
          return spectral_kuf(f, X, quad);
        } else {
          throw std::invalid_argument(family_name(feat) + " has no spectral basis");
        }
      },
      feat);
}

struct ExactKuf {};
struct QuadratureKuf {
  QuadratureSpec spec;
};
struct MonteCarloKuf {
  StratifiedSampler sampler;
};
using KufMode = std::variant<ExactKuf, QuadratureKuf, MonteCarloKuf>;

inline Eigen::MatrixXd kuf(const FeatureFamily &feat, const Eigen::VectorXd &X,
                           const KufMode &mode) {
  if (std::holds_alternative<QuadratureKuf>(mode)) {
    return spectral_kuf(feat, X, std::get<QuadratureKuf>(mode).spec);
  }
  if (const auto *mc = std::get_if<MonteCarloKuf>(&mode)) {
    const auto *trig = std::get_if<TrigVOF>(&feat);
    if (trig == nullptr) {
      throw std::invalid_argument("Monte Carlo Kuf is defined for TrigVOF only");
    }
    return trig_kuf_estimate(*trig, X, mc->sampler);
  }
  return exact_kuf(feat, X);
}

// Qff = Kuf^T Kuu^{-1} Kuf.
inline KernelMatrix qff(const FeatureFamily &feat, const Eigen::VectorXd &X,
                        const KufMode &mode) {
  const Eigen::MatrixXd K = kuf(feat, X, mode);
  const KuuDescriptor Kuu = kuu(feat);
  KernelMatrix out;
  if (K.rows() == 0) {
    out.entries = Eigen::MatrixXd::Zero(X.size(), X.size());
  } else if (Kuu.is_identity()) {
    out.entries = K.transpose() * K;
  } else {
    const Eigen::MatrixXd half = Kuu.cholesky().matrixL().solve(K);
    out.entries = half.transpose() * half;
  }
  return out;
}

} // namespace vof

#endif
