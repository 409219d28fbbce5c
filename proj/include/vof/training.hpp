#ifndef VOF_TRAINING_HPP
#define VOF_TRAINING_HPP

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vof/exact_gp.hpp"
#include "vof/svgp.hpp"
#include "vof/training/objective.hpp"
#include "vof/training/params.hpp"

namespace vof {

struct OptimizerConfig {
  enum class Method { Adam, LBFGSLike, GridThenAdam };

  Method method = Method::Adam;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int iterations = 3000;
  // 0 means full batch
  int minibatch = 0;
  GradientMode gradient = GradientMode::FiniteDifference;
  std::uint64_t seed = 0;
  double fd_step = 1e-5;
  int trace_every = 1;
  int lbfgs_memory = 10;
  // GridThenAdam: constrained values tried for one named parameter, each
  // scored by the mean objective over `grid_evaluations` steps
  std::string grid_parameter;
  std::vector<double> grid_values;
  int grid_evaluations = 1;

  void validate() const {
    if (iterations < 0) {
      throw std::invalid_argument("OptimizerConfig: iterations must be >= 0");
    }
    if (!(learning_rate > 0.0)) {
      throw std::invalid_argument("OptimizerConfig: learning rate must be > 0");
    }
    if (!(fd_step > 0.0)) {
      throw std::invalid_argument("OptimizerConfig: finite-difference step must be > 0");
    }
    if (trace_every < 1 || lbfgs_memory < 1 || grid_evaluations < 1 || minibatch < 0) {
      throw std::invalid_argument("OptimizerConfig: counts must be positive");
    }
    if (method == Method::GridThenAdam && (grid_parameter.empty() || grid_values.empty())) {
      throw std::invalid_argument("OptimizerConfig: GridThenAdam needs a parameter and values");
    }
  }
};

inline std::string to_string(OptimizerConfig::Method method) {
  switch (method) {
  case OptimizerConfig::Method::Adam:
    return "adam";
  case OptimizerConfig::Method::LBFGSLike:
    return "lbfgs";
  case OptimizerConfig::Method::GridThenAdam:
    return "grid_then_adam";
  }
  return "unknown";
}

inline OptimizerConfig::Method optimizer_method_from_string(std::string_view name) {
  if (name == "adam") {
    return OptimizerConfig::Method::Adam;
  }
  if (name == "lbfgs") {
    return OptimizerConfig::Method::LBFGSLike;
  }
  if (name == "grid_then_adam") {
    return OptimizerConfig::Method::GridThenAdam;
  }
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

struct TracePoint {
  int iteration;
  double value;
};

struct FitResult {
  SVGPModel model;
  ParamVector params;
  std::vector<TracePoint> trace;
};

namespace detail {

inline void record(std::vector<TracePoint> &trace, int iteration, double value, int every) {
  if (iteration % every == 0) {
    trace.push_back({iteration, value});
  }
}

// Gradient ascent with Adam; step t uses random numbers from stream t.
template <class Objective>
Eigen::VectorXd adam_maximize(const Objective &objective, Eigen::VectorXd x,
                              const OptimizerConfig &config, std::vector<TracePoint> &trace) {
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd grad;
  double b1 = 1.0;
  double b2 = 1.0;
  for (int t = 0; t < config.iterations; ++t) {
    const double f = objective.value_and_gradient(x, static_cast<std::uint64_t>(t),
                                                  config.gradient, config.fd_step, grad);
    record(trace, t, f, config.trace_every);
    b1 *= config.beta1;
    b2 *= config.beta2;
    m1 = config.beta1 * m1 + (1.0 - config.beta1) * grad;
    m2 = config.beta2 * m2 + (1.0 - config.beta2) * grad.cwiseAbs2();
    const Eigen::ArrayXd mhat = m1.array() / (1.0 - b1);
    const Eigen::ArrayXd vhat = m2.array() / (1.0 - b2);
    x.array() += config.learning_rate * mhat / (vhat.sqrt() + config.epsilon);
  }
  return x;
}

/*
 * Limited-memory quasi-Newton ascent with Armijo backtracking. Curvature
 * pairs with s^T y <= 0 are skipped. All evaluations use stream 0, so a
 * Monte Carlo objective is optimized as a fixed sample average.
 */
template <class Objective>
Eigen::VectorXd lbfgs_maximize(const Objective &objective, Eigen::VectorXd x,
                               const OptimizerConfig &config, std::vector<TracePoint> &trace) {
  // minimize F = -f
  Eigen::VectorXd grad;
  double F = -objective.value_and_gradient(x, 0, config.gradient, config.fd_step, grad);
  Eigen::VectorXd g = -grad;
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;
  for (int t = 0; t < config.iterations; ++t) {
    record(trace, t, -F, config.trace_every);
    if (g.size() == 0 || g.cwiseAbs().maxCoeff() < 1e-12) {
      break;
    }
    Eigen::VectorXd d = -g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto &[s, yv] = memory[i];
      alpha[i] = s.dot(d) / s.dot(yv);
      d -= alpha[i] * yv;
    }
    if (memory.empty()) {
      d *= config.learning_rate / std::max(1.0, g.cwiseAbs().maxCoeff());
    } else {
      const auto &[s, yv] = memory.back();
      d *= s.dot(yv) / yv.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto &[s, yv] = memory[i];
      const double beta = yv.dot(d) / s.dot(yv);
      d += (alpha[i] - beta) * s;
    }
    if (g.dot(d) >= 0.0) {
      memory.clear();
      d = -g * (config.learning_rate / std::max(1.0, g.cwiseAbs().maxCoeff()));
    }
    const double slope = g.dot(d);
    double step = 1.0;
    double Fnew = std::numeric_limits<double>::infinity();
    Eigen::VectorXd xnew;
    for (int k = 0; k < 50; ++k) {
      xnew = x + step * d;
      try {
        Fnew = -objective.value(xnew, 0);
      } catch (const NonFiniteObjective &) {
        Fnew = std::numeric_limits<double>::infinity();
      } catch (const NotPositiveDefinite &) {
        Fnew = std::numeric_limits<double>::infinity();
      }
      if (Fnew <= F + 1e-4 * step * slope) {
        break;
      }
      step *= 0.5;
    }
    if (!(Fnew <= F + 1e-4 * step * slope)) {
      break;
    }
    Fnew = -objective.value_and_gradient(xnew, 0, config.gradient, config.fd_step, grad);
    const Eigen::VectorXd gnew = -grad;
    Eigen::VectorXd s = xnew - x;
    Eigen::VectorXd yv = gnew - g;
    if (s.dot(yv) > 1e-12 * s.norm() * yv.norm()) {
      memory.emplace_back(std::move(s), std::move(yv));
      if (static_cast<int>(memory.size()) > config.lbfgs_memory) {
        memory.pop_front();
      }
    }
    x = std::move(xnew);
    g = gnew;
    F = Fnew;
  }
  return x;
}

} // namespace detail

// Exact log marginal likelihood in (log v, log l, log s2).
class ExactLmlObjective {
public:
  ExactLmlObjective(KernelFamily family, Eigen::VectorXd X, Eigen::VectorXd y)
      : family_(family), X_(std::move(X)), y_(std::move(y)) {}

  double value(const Eigen::VectorXd &theta, std::uint64_t) const {
    if (!theta.allFinite()) {
      throw NonFiniteObjective("exact LML parameters are not finite");
    }
    const KernelParams kernel(family_, std::exp(theta[0]), std::exp(theta[1]));
    const double f = exact_lml(kernel, X_, y_, std::exp(theta[2]));
    if (!std::isfinite(f)) {
      throw NonFiniteObjective("exact LML is not finite");
    }
    return f;
  }

  double value_and_gradient(const Eigen::VectorXd &theta, std::uint64_t step, GradientMode,
                            double h, Eigen::VectorXd &grad) const {
    grad = finite_difference_gradient([&](const Eigen::VectorXd &t) { return value(t, step); },
                                      theta, h);
    return value(theta, step);
  }

private:
  KernelFamily family_;
  Eigen::VectorXd X_;
  Eigen::VectorXd y_;
};

struct ExactFit {
  KernelParams kernel;
  double noise_variance;
  double lml;
};

// Type-II maximum likelihood for the exact GP with LBFGSLike.
inline ExactFit fit_exact_gp(const KernelParams &start, double noise_variance,
                             const Eigen::VectorXd &X, const Eigen::VectorXd &y,
                             int iterations = 100) {
  OptimizerConfig config;
  config.method = OptimizerConfig::Method::LBFGSLike;
  config.learning_rate = 1.0;
  config.iterations = iterations;
  const ExactLmlObjective objective(start.family(), X, y);
  Eigen::Vector3d theta(std::log(start.variance()), std::log(start.lengthscale()),
                        std::log(noise_variance));
  std::vector<TracePoint> trace;
  if (iterations > 0) {
    theta = detail::lbfgs_maximize(objective, Eigen::VectorXd(theta), config, trace);
  }
  const KernelParams kernel(start.family(), std::exp(theta[0]), std::exp(theta[1]));
  return {kernel, std::exp(theta[2]), objective.value(theta, 0)};
}

/*
 * Maximizes the objective from the template. Zero iterations return the
 * template unchanged with an empty trace. Deterministic given the config.
 */
inline FitResult fit(const SVGPModel &tmpl, const Eigen::VectorXd &X, const Eigen::VectorXd &y,
                     const ObjectiveSpec &spec, const OptimizerConfig &config) {
  config.validate();
  const ElboObjective objective(tmpl, X, y, spec, config.minibatch, config.seed);
  if (config.iterations == 0) {
    return {tmpl, objective.initial(), {}};
  }
  ParamVector start = objective.initial();
  if (config.method == OptimizerConfig::Method::GridThenAdam) {
    double best = -std::numeric_limits<double>::infinity();
    ParamVector chosen = start;
    for (double value : config.grid_values) {
      ParamVector trial = start;
      trial.set_constrained(config.grid_parameter, value);
      double total = 0.0;
      for (int k = 0; k < config.grid_evaluations; ++k) {
        total += objective.value_of(trial, static_cast<std::uint64_t>(k));
      }
      const double mean = total / config.grid_evaluations;
      if (mean > best) {
        best = mean;
        chosen = trial;
      }
    }
    start = chosen;
  }
  // the grid may move a parameter that is not free, so rebuild from `start`
  const ElboObjective tuned(objective.model_from(start), X, y, spec, config.minibatch, config.seed);
  std::vector<TracePoint> trace;
  Eigen::VectorXd x = tuned.initial().free();
  if (config.method == OptimizerConfig::Method::LBFGSLike) {
    x = detail::lbfgs_maximize(tuned, x, config, trace);
  } else {
    x = detail::adam_maximize(tuned, x, config, trace);
  }
  const ParamVector params = tuned.initial().with_free(x);
  return {tuned.model_from(params), params, std::move(trace)};
}

} // namespace vof

#endif
