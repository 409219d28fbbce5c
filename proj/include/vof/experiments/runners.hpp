#ifndef VOF_EXPERIMENTS_RUNNERS_HPP
#define VOF_EXPERIMENTS_RUNNERS_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "vof/exact_gp.hpp"
#include "vof/experiments/config.hpp"
#include "vof/experiments/dataset.hpp"
#include "vof/experiments/results.hpp"
#include "vof/svgp.hpp"
#include "vof/training.hpp"

#ifndef VOF_VERSION_STRING
#define VOF_VERSION_STRING "unknown"
#endif

namespace vof {

// Runs fn(0..count-1) on up to `threads` workers; rethrows the first error.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)> &fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto &t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

struct RunRecord {
  ResultTable results;
  std::vector<std::string> outputs;
  json summary = json::object();
  std::vector<std::string> notes;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_manifest(const ExperimentConfig &config, const RunRecord &record,
                           double seconds, const std::string &started) {
  json manifest = config.to_json();
  manifest["version"] = VOF_VERSION_STRING;
  manifest["config_text"] = config.source_text.empty() ? json(nullptr) : json(config.source_text);
  manifest["source_dir"] = config.source_dir.string();
  manifest["threads"] = config.threads;
  manifest["started_utc"] = started;
  manifest["wall_clock_seconds"] = seconds;
  std::vector<std::string> outputs = {"results.csv"};
  outputs.insert(outputs.end(), record.outputs.begin(), record.outputs.end());
  manifest["outputs"] = outputs;
  manifest["summary"] = record.summary;
  manifest["notes"] = record.notes;
  write_file_atomic(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace detail {

inline Dataset config_dataset(const ExperimentConfig &config) {
  const json &data = config.settings.at("data");
  if (!data.at("path").get<std::string>().empty()) {
    return load_csv(resolve_data_path(config));
  }
  const json &g = data.at("generator");
  return generate_dataset(input_distribution_from_json(g.at("inputs")), g.at("N").get<int>(),
                          kernel_from_json(g.at("kernel")), g.at("noise_variance").get<double>(),
                          derive_seed(config.seed, {0}));
}

inline SVGPModel config_model(const ExperimentConfig &config, const Dataset &data) {
  const json &s = config.settings;
  const KernelParams kernel = kernel_from_json(s.at("kernel"));
  const double lo = data.size() ? data.X.minCoeff() : -3.0;
  const double hi = data.size() ? data.X.maxCoeff() : 3.0;
  auto features = features_from_json(s.at("features"), kernel, {lo, hi});
  return SVGPModel::with_prior(std::move(features), s.at("noise_variance").get<double>(),
                               structure_from_string(s.at("features").at("structure")));
}

inline QuadratureSpec prediction_quadrature(const SVGPModel &model, const Eigen::VectorXd &X,
                                            int order) {
  if (const auto *trig = std::get_if<TrigVOF>(&model.features)) {
    const double reach = X.size() ? X.cwiseAbs().maxCoeff() : 0.0;
    return QuadratureSpec::gauss_legendre(order > 0 ? order : trig->default_quadrature_order(reach));
  }
  return QuadratureSpec::gauss_hermite(order > 0 ? order : 64);
}

// Deterministic ELBO: closed form, or Gauss-Legendre Kuf for TrigVOF.
inline double deterministic_elbo(const SVGPModel &model, const Eigen::VectorXd &X,
                                 const Eigen::VectorXd &y) {
  if (has_exact_kuf(model.features)) {
    return elbo_gaussian(model, X, y);
  }
  return elbo_gaussian(model, X, y, prediction_quadrature(model, X, 0));
}

struct MeanSe {
  double mean;
  double se;
};

inline MeanSe mc_elbo_average(const SVGPModel &model, const Eigen::VectorXd &X,
                              const Eigen::VectorXd &y, int T, int evaluations,
                              std::uint64_t seed) {
  const double a = std::get<TrigVOF>(model.features).a();
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  for (int k = 0; k < evaluations; ++k) {
    const StratifiedSampler sampler(T, derive_seed(seed, {static_cast<std::uint64_t>(k)}), -a, a);
    const double v = mc_elbo_gaussian(model, X, y, sampler);
    const double delta = v - mean;
    mean += delta / (k + 1);
    m2 += delta * (v - mean);
  }
  const double var = evaluations > 1 ? m2 / (evaluations - 1) : 0.0;
  return {mean, std::sqrt(var / evaluations)};
}

inline Eigen::VectorXd grid_from_json(const json &g) {
  return Eigen::VectorXd::LinSpaced(g.at("count").get<int>(), g.at("lo").get<double>(),
                                    g.at("hi").get<double>());
}

} // namespace detail

// Fits the configured model; results.csv is the objective trace.
inline RunRecord run_fit(const ExperimentConfig &config) {
  const json &s = config.settings;
  const Dataset data = detail::config_dataset(config);
  const SVGPModel tmpl = detail::config_model(config, data);
  const ObjectiveSpec spec = objective_from_json(s.at("objective"));
  const OptimizerConfig opt = optimizer_from_json(s.at("optimizer"), derive_seed(config.seed, {1}));
  const FitResult result = fit(tmpl, data.X, data.y, spec, opt);

  RunRecord record;
  record.results = ResultTable({"iteration", "objective"});
  for (const auto &p : result.trace) {
    record.results.add_row({std::int64_t{p.iteration}, p.value});
  }
  ResultTable params({"name", "value"});
  for (int i = 0; i < result.params.q_offset(); ++i) {
    params.add_row({result.params.entries[static_cast<std::size_t>(i)].name,
                    result.params.constrained(i)});
  }
  params.write(config.output_dir / "parameters.csv");
  const Eigen::VectorXd grid = detail::grid_from_json(s.at("predict"));
  const auto moments = predict(result.model, grid,
                               detail::prediction_quadrature(
                                   result.model, grid, s.at("predict").at("quadrature_order").get<int>()));
  ResultTable pred({"x", "mean", "variance"});
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    pred.add_row({grid[i], moments.mean[i], moments.variance[i]});
  }
  pred.write(config.output_dir / "predictions.csv");
  record.outputs = {"parameters.csv", "predictions.csv"};
  record.summary["data"] = data.metadata;
  record.summary["final_elbo"] = detail::deterministic_elbo(result.model, data.X, data.y);
  record.summary["exact_lml"] =
      exact_lml(result.model.kernel(), data.X, data.y, result.model.noise_variance);
  record.summary["clamped_variances"] = moments.clamped_count;
  return record;
}

/*
 * ELBO at the optimal q of each covariance structure for the configured
 * hyperparameters, next to the exact log marginal likelihood.
 */
inline RunRecord run_elbo(const ExperimentConfig &config) {
  const Dataset data = detail::config_dataset(config);
  const SVGPModel tmpl = detail::config_model(config, data);
  const int evaluations = config.settings.at("elbo_evaluations").get<int>();
  const int T = config.settings.at("objective").at("mc_samples").get<int>();
  RunRecord record;
  record.results = ResultTable({"method", "structure", "elbo", "elbo_se", "provenance"});
  const KuuDescriptor Kuu = kuu(tmpl.features);
  for (auto structure : {VariationalDistribution::Structure::Dense,
                         VariationalDistribution::Structure::Diagonal}) {
    if (structure == VariationalDistribution::Structure::Diagonal && !Kuu.is_identity()) {
      continue;
    }
    if (has_exact_kuf(tmpl.features)) {
      record.results.add_row({family_name(tmpl.features), to_string(structure),
                              collapsed_elbo(tmpl, data.X, data.y, structure), 0.0,
                              std::string("analytic")});
      continue;
    }
    const QuadratureSpec quad = detail::prediction_quadrature(tmpl, data.X, 0);
    const Eigen::MatrixXd K = spectral_kuf(tmpl.features, data.X, quad);
    const SVGPModel model =
        tmpl.with_q(optimal_q_from_kuf(K, data.y, tmpl.noise_variance, Kuu, structure));
    record.results.add_row({family_name(tmpl.features), to_string(structure),
                            elbo_gaussian(model, data.X, data.y, quad), 0.0,
                            "gauss_legendre(" + std::to_string(quad.order) + ")"});
    const auto mc = detail::mc_elbo_average(model, data.X, data.y, T, evaluations,
                                            derive_seed(config.seed, {2}));
    record.results.add_row({family_name(tmpl.features), to_string(structure), mc.mean, mc.se,
                            "monte_carlo(" + std::to_string(T) + ")"});
  }
  record.results.add_row({std::string("exact"), std::string(""),
                          exact_lml(tmpl.kernel(), data.X, data.y, tmpl.noise_variance), 0.0,
                          std::string("analytic")});
  record.summary["data"] = data.metadata;
  return record;
}

// k_a(tau) = (2 pi)^{-1/2} int_{-a}^{a} s(w) cos(w tau) dw
inline Eigen::MatrixXd band_limited_kernel_matrix(const KernelParams &kernel,
                                                  const Eigen::VectorXd &X, double a) {
  const double span = X.size() ? X.maxCoeff() - X.minCoeff() : 0.0;
  const int order = std::min(4096, static_cast<int>(std::ceil(4.0 * a * span / std::numbers::pi)) + 128);
  const auto rule = gauss_legendre_rule(order, Interval{-a, a});
  Eigen::VectorXd w(static_cast<Eigen::Index>(rule.size()));
  Eigen::VectorXd omega(w.size());
  for (Eigen::Index t = 0; t < w.size(); ++t) {
    omega[t] = rule.nodes[static_cast<std::size_t>(t)];
    w[t] = rule.weights[static_cast<std::size_t>(t)] * spectral_density(kernel, omega[t]) /
           std::sqrt(2.0 * std::numbers::pi);
  }
  Eigen::MatrixXd out(X.size(), X.size());
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double tau = X[i] - X[j];
      out(i, j) = out(j, i) = w.dot((omega * tau).array().cos().matrix());
    }
  }
  return out;
}

struct Fig1Cell {
  std::string row;
  double a;
  int M;
  double max_abs_error;
  double max_abs_error_bandlimited;
  double edge_center_error_ratio;
};

/*
 * Dense Qff from quadrature Kuf for TrigVOF(M, a) on the grid X, with the
 * errors against Kff and against the band-limited kernel. The edge/center
 * ratio compares the largest |Qff - Kff| with both inputs beyond
 * edge_start to the largest with both inside center_halfwidth.
 */
inline Fig1Cell fig1_cell(const KernelParams &kernel, const Eigen::VectorXd &X, double a, int M,
                          double center_halfwidth, double edge_start, Eigen::MatrixXd *Q_out = nullptr,
                          Eigen::MatrixXd *B_out = nullptr) {
  const TrigVOF feat(M, a, kernel);
  const int order = feat.default_quadrature_order(X.size() ? X.cwiseAbs().maxCoeff() : 0.0);
  const Eigen::MatrixXd Q =
      qff(FeatureFamily(feat), X, QuadratureKuf{QuadratureSpec::gauss_legendre(order)}).entries;
  const Eigen::MatrixXd K = kernel_matrix(kernel, X, 0.0).entries;
  const Eigen::MatrixXd B = band_limited_kernel_matrix(kernel, X, a);
  const Eigen::MatrixXd E = (Q - K).cwiseAbs();
  double center = 0.0;
  double edge = 0.0;
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    for (Eigen::Index j = 0; j < X.size(); ++j) {
      if (std::abs(X[i]) <= center_halfwidth && std::abs(X[j]) <= center_halfwidth) {
        center = std::max(center, E(i, j));
      }
      if (std::abs(X[i]) >= edge_start && std::abs(X[j]) >= edge_start) {
        edge = std::max(edge, E(i, j));
      }
    }
  }
  if (Q_out != nullptr) {
    *Q_out = Q;
  }
  if (B_out != nullptr) {
    *B_out = B;
  }
  return {"", a, M, E.maxCoeff(), (Q - B).cwiseAbs().maxCoeff(),
          center > 0.0 ? edge / center : std::numeric_limits<double>::infinity()};
}

inline RunRecord run_fig1(const ExperimentConfig &config) {
  const json &s = config.settings;
  const KernelParams kernel = kernel_from_json(s.at("kernel"));
  const Eigen::VectorXd X = detail::grid_from_json(s.at("grid"));
  struct Setting {
    std::string row;
    double a;
    int M;
  };
  std::vector<Setting> settings;
  for (const auto &M : s.at("top").at("M")) {
    settings.push_back({"top", s.at("top").at("a").get<double>(), M.get<int>()});
  }
  for (const auto &a : s.at("bottom").at("a")) {
    settings.push_back({"bottom", a.get<double>(), s.at("bottom").at("M").get<int>()});
  }
  const double center = s.at("center_halfwidth").get<double>();
  const double edge = s.at("edge_start").get<double>();
  std::vector<Fig1Cell> cells(settings.size());
  std::vector<std::string> files(settings.size());
  parallel_for(settings.size(), config.threads, [&](std::size_t i) {
    Eigen::MatrixXd Q;
    Eigen::MatrixXd B;
    cells[i] = fig1_cell(kernel, X, settings[i].a, settings[i].M, center, edge, &Q, &B);
    cells[i].row = settings[i].row;
    const Eigen::MatrixXd K = kernel_matrix(kernel, X, 0.0).entries;
    ResultTable cell({"i", "j", "x_i", "x_j", "qff", "kff", "bandlimited", "error"});
    for (Eigen::Index a = 0; a < X.size(); ++a) {
      for (Eigen::Index b = 0; b < X.size(); ++b) {
        cell.add_row({std::int64_t{a}, std::int64_t{b}, X[a], X[b], Q(a, b), K(a, b), B(a, b),
                      Q(a, b) - K(a, b)});
      }
    }
    files[i] = "cells/cell_" + std::to_string(i) + ".csv";
    cell.write(config.output_dir / files[i]);
  });
  RunRecord record;
  record.results = ResultTable({"row", "a", "M", "max_abs_error", "max_abs_error_bandlimited",
                                "edge_center_error_ratio", "cell_file"});
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto &c = cells[i];
    record.results.add_row({c.row, c.a, std::int64_t{c.M}, c.max_abs_error,
                            c.max_abs_error_bandlimited, c.edge_center_error_ratio, files[i]});
  }
  record.outputs = files;
  return record;
}

struct Fig2Panel {
  std::string name;
  double a = 0.0;
  double objective = 0.0;
  double objective_mc = 0.0;
  double objective_mc_se = 0.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

struct Fig2Result {
  Dataset data;
  Eigen::VectorXd grid;
  std::vector<Fig2Panel> panels;
};

/*
 * Fixed Matern 5/2 hyperparameters; TrigVOF with diagonal S trained by
 * Adam on the Monte Carlo ELBO for a too small, a too large and a
 * optimized jointly with q, plus the exact posterior. The reported
 * objective is the ELBO with Gauss-Legendre Kuf (the LML for the exact
 * panel); the Monte Carlo average is reported alongside.
 */
inline Fig2Result fig2_panels(const json &s, std::uint64_t seed, int threads) {
  const KernelParams kernel = kernel_from_json(s.at("kernel"));
  const double noise_sd = s.at("noise_sd").get<double>();
  const double noise = noise_sd * noise_sd;
  const int N = s.at("N").get<int>();
  const int M = s.at("M").get<int>();
  const int T = s.at("mc_samples").get<int>();
  const int evaluations = s.at("elbo_evaluations").get<int>();
  Fig2Result out;
  out.data.X = generate_inputs(input_distribution_from_json(s.at("inputs")), N, derive_seed(seed, {0}));
  out.data.y = sample_prior(kernel, out.data.X, noise, derive_seed(seed, {1}));
  out.data.metadata = "fig2 prior sample";
  out.grid = detail::grid_from_json(s.at("grid"));

  struct Setting {
    std::string name;
    double a;
    bool train_a;
  };
  const std::vector<Setting> settings = {{"a_small", s.at("a_small").get<double>(), false},
                                         {"a_large", s.at("a_large").get<double>(), false},
                                         {"a_optimized", s.at("a_start").get<double>(), true}};
  out.panels.resize(settings.size() + 1);
  parallel_for(settings.size() + 1, threads, [&](std::size_t i) {
    Fig2Panel &panel = out.panels[i];
    if (i == settings.size()) {
      panel.name = "exact";
      const auto post = ExactPosterior::fit(kernel, out.data.X, out.data.y, noise);
      std::tie(panel.mean, panel.variance) = post.predict(out.grid);
      panel.objective = panel.objective_mc = exact_lml(kernel, out.data.X, out.data.y, noise);
      return;
    }
    const Setting &set = settings[i];
    const SVGPModel tmpl = SVGPModel::with_prior(TrigVOF(M, set.a, kernel), noise,
                                                 VariationalDistribution::Structure::Diagonal);
    ObjectiveSpec spec{ObjectiveKind::MCELBO, T, TrainableFlags::variational_only()};
    spec.trainable.feature = set.train_a;
    const OptimizerConfig opt =
        optimizer_from_json(s.at("optimizer"), derive_seed(seed, {2, static_cast<std::uint64_t>(i)}));
    const FitResult fitted = fit(tmpl, out.data.X, out.data.y, spec, opt);
    const auto &trig = std::get<TrigVOF>(fitted.model.features);
    panel.name = set.name;
    panel.a = trig.a();
    const Eigen::VectorXd all_x =
        (Eigen::VectorXd(out.data.size() + out.grid.size()) << out.data.X, out.grid).finished();
    const QuadratureSpec quad = detail::prediction_quadrature(fitted.model, all_x, 0);
    panel.objective = elbo_gaussian(fitted.model, out.data.X, out.data.y, quad);
    const auto mc = detail::mc_elbo_average(fitted.model, out.data.X, out.data.y, T, evaluations,
                                            derive_seed(seed, {3, static_cast<std::uint64_t>(i)}));
    panel.objective_mc = mc.mean;
    panel.objective_mc_se = mc.se;
    const auto moments = predict(fitted.model, out.grid, quad);
    panel.mean = moments.mean;
    panel.variance = moments.variance;
  });
  return out;
}

inline RunRecord run_fig2(const ExperimentConfig &config) {
  const Fig2Result res = fig2_panels(config.settings, config.seed, config.threads);
  RunRecord record;
  record.results = ResultTable({"panel", "a", "objective", "objective_mc_mean", "objective_mc_se"});
  ResultTable curves({"panel", "x", "mean", "lower", "upper"});
  for (const auto &p : res.panels) {
    record.results.add_row({p.name, p.a, p.objective, p.objective_mc, p.objective_mc_se});
    for (Eigen::Index i = 0; i < res.grid.size(); ++i) {
      const double sd = std::sqrt(p.variance[i]);
      curves.add_row({p.name, res.grid[i], p.mean[i], p.mean[i] - 2.0 * sd, p.mean[i] + 2.0 * sd});
    }
  }
  curves.write(config.output_dir / "curves.csv");
  save_csv(res.data, config.output_dir / "data.csv");
  record.outputs = {"curves.csv", "data.csv"};
  record.summary["noise_sd"] = config.settings.at("noise_sd");
  record.notes.push_back("objective: ELBO with Gauss-Legendre Kuf; exact panel: log marginal likelihood");
  return record;
}

struct Fig3Cell {
  std::string distribution;
  std::string family;
  std::string structure;
  int M = 0;
  double elbo = 0.0;
  double elbo_se = 0.0;
  std::string parameter;
  double parameter_value = 0.0;
};

// r with the Hermite features equal to eigenfunction features for inputs of sd `input_sd`.
inline double hermite_r_for_input_sd(double lengthscale, double input_sd) {
  const double l2 = lengthscale * lengthscale;
  return std::pow(l2 * input_sd * input_sd + 0.25 * l2 * l2, 0.25);
}

/*
 * Collapsed fit of Hermite features with S restricted to `structure`: r
 * chosen on a grid of equivalent input sds, then refined by LBFGSLike
 * (jointly with v, l, s2 when train_hyperparameters is set).
 */
inline Fig3Cell fig3_hermite_cell(const Eigen::VectorXd &X, const Eigen::VectorXd &y,
                                  const KernelParams &kernel, double noise, int M,
                                  VariationalDistribution::Structure structure, const json &h) {
  double best = -std::numeric_limits<double>::infinity();
  double best_r = 0.0;
  for (const auto &sd : h.at("input_sd_grid")) {
    const double r = hermite_r_for_input_sd(kernel.lengthscale(), sd.get<double>());
    const double value =
        collapsed_elbo(SVGPModel::with_prior(HermiteVOF(M, r, kernel), noise, structure), X, y,
                       structure);
    if (value > best) {
      best = value;
      best_r = r;
    }
  }
  SVGPModel model = SVGPModel::with_prior(HermiteVOF(M, best_r, kernel), noise, structure);
  const int iterations = h.at("refine_iterations").get<int>();
  if (iterations > 0) {
    ObjectiveSpec spec{ObjectiveKind::CollapsedELBO, 1, TrainableFlags::hyperparameters_only()};
    if (!h.at("train_hyperparameters").get<bool>()) {
      spec.trainable = {false, false, false, true, false};
    }
    OptimizerConfig opt;
    opt.method = OptimizerConfig::Method::LBFGSLike;
    opt.learning_rate = 1.0;
    opt.iterations = iterations;
    model = fit(model, X, y, spec, opt).model;
  }
  Fig3Cell cell;
  cell.family = "hermite";
  cell.structure = to_string(structure);
  cell.M = M;
  cell.elbo = collapsed_elbo(model, X, y, structure);
  cell.parameter = "r";
  cell.parameter_value = std::get<HermiteVOF>(model.features).r();
  return cell;
}

/*
 * TrigVOF with S restricted to `structure`: a chosen on a grid by the ELBO
 * at the quadrature-Kuf optimal q, then q and a trained by Adam on the
 * Monte Carlo ELBO from that warm start. The reported ELBO is the mean of
 * full-batch Monte Carlo evaluations.
 */
inline Fig3Cell fig3_trig_cell(const Eigen::VectorXd &X, const Eigen::VectorXd &y,
                               const KernelParams &kernel, double noise, int M,
                               VariationalDistribution::Structure structure, const json &t,
                               std::uint64_t seed) {
  double best = -std::numeric_limits<double>::infinity();
  std::optional<SVGPModel> start;
  for (const auto &a : t.at("a_grid")) {
    const SVGPModel prior = SVGPModel::with_prior(TrigVOF(M, a.get<double>(), kernel), noise, structure);
    const QuadratureSpec quad = detail::prediction_quadrature(prior, X, 0);
    const Eigen::MatrixXd K = spectral_kuf(prior.features, X, quad);
    const auto q = optimal_q_from_kuf(K, y, noise, KuuDescriptor::identity(M), structure);
    const double value = elbo_from_kuf(q, KuuDescriptor::identity(M), K,
                                       prior_variance_vector(kernel, X.size()), y, noise);
    if (value > best) {
      best = value;
      start = prior.with_q(q);
    }
  }
  const int T = t.at("mc_samples").get<int>();
  ObjectiveSpec spec{ObjectiveKind::MCELBO, T, {}};
  if (!t.at("train_hyperparameters").get<bool>()) {
    spec.trainable = {false, false, false, true, true};
  }
  OptimizerConfig opt;
  opt.method = OptimizerConfig::Method::Adam;
  opt.learning_rate = t.at("learning_rate").get<double>();
  opt.iterations = t.at("iterations").get<int>();
  opt.minibatch = t.at("minibatch").get<int>();
  opt.gradient = GradientMode::Supplied;
  opt.seed = derive_seed(seed, {0});
  opt.trace_every = std::max(1, opt.iterations);
  const SVGPModel model = fit(*start, X, y, spec, opt).model;
  const auto mc = detail::mc_elbo_average(model, X, y, T, t.at("elbo_evaluations").get<int>(),
                                          derive_seed(seed, {1}));
  Fig3Cell cell;
  cell.family = "trig";
  cell.structure = to_string(structure);
  cell.M = M;
  cell.elbo = mc.mean;
  cell.elbo_se = mc.se;
  cell.parameter = "a";
  cell.parameter_value = std::get<TrigVOF>(model.features).a();
  return cell;
}

struct Fig3Data {
  std::string distribution;
  Dataset data;
  double lml;
};

inline Fig3Data fig3_dataset(const json &s, const std::string &distribution, std::uint64_t seed) {
  const KernelParams kernel = kernel_from_json(s.at("kernel"));
  const double noise_sd = s.at("noise_sd").get<double>();
  Fig3Data out{distribution,
               generate_dataset(named_distribution(distribution), s.at("N").get<int>(), kernel,
                                noise_sd * noise_sd, seed),
               0.0};
  const json &e = s.at("exact");
  if (e.at("fit_hyperparameters").get<bool>()) {
    out.lml = fit_exact_gp(kernel, noise_sd * noise_sd, out.data.X, out.data.y,
                           e.at("iterations").get<int>())
                  .lml;
  } else {
    out.lml = exact_lml(kernel, out.data.X, out.data.y, noise_sd * noise_sd);
  }
  return out;
}

inline RunRecord run_fig3(const ExperimentConfig &config) {
  const json &s = config.settings;
  const KernelParams kernel = kernel_from_json(s.at("kernel"));
  const double noise_sd = s.at("noise_sd").get<double>();
  const auto distributions = s.at("distributions").get<std::vector<std::string>>();
  const auto families = s.at("families").get<std::vector<std::string>>();
  const auto structures = s.at("structures").get<std::vector<std::string>>();
  const auto Ms = s.at("M").get<std::vector<int>>();

  std::vector<Fig3Data> datasets(distributions.size());
  parallel_for(distributions.size(), config.threads, [&](std::size_t d) {
    datasets[d] = fig3_dataset(s, distributions[d], derive_seed(config.seed, {0, d}));
  });

  struct Task {
    std::size_t dist;
    std::string family;
    std::string structure;
    int M;
  };
  std::vector<Task> tasks;
  for (std::size_t d = 0; d < distributions.size(); ++d) {
    for (const auto &f : families) {
      for (const auto &st : structures) {
        for (int M : Ms) {
          tasks.push_back({d, f, st, M});
        }
      }
    }
  }
  std::vector<Fig3Cell> cells(tasks.size());
  std::vector<std::string> files(tasks.size());
  const std::vector<std::string> header = {"distribution", "family", "structure", "M", "elbo",
                                           "elbo_se", "lml", "parameter", "parameter_value"};
  const auto row = [&](const Fig3Cell &c, double lml) -> std::vector<Cell> {
    return {c.distribution, c.family, c.structure, std::int64_t{c.M}, c.elbo,
            c.elbo_se,      lml,      c.parameter, c.parameter_value};
  };
  parallel_for(tasks.size(), config.threads, [&](std::size_t i) {
    const Task &task = tasks[i];
    const Fig3Data &d = datasets[task.dist];
    const auto structure = structure_from_string(task.structure);
    if (task.family == "hermite") {
      cells[i] = fig3_hermite_cell(d.data.X, d.data.y, kernel, noise_sd * noise_sd, task.M,
                                   structure, s.at("hermite"));
    } else if (task.family == "trig") {
      cells[i] = fig3_trig_cell(d.data.X, d.data.y, kernel, noise_sd * noise_sd, task.M, structure,
                                s.at("trig"), derive_seed(config.seed, {1, i}));
    } else {
      throw std::invalid_argument("fig3: unknown family '" + task.family + "'");
    }
    cells[i].distribution = d.distribution;
    ResultTable one(header);
    one.add_row(row(cells[i], d.lml));
    files[i] = "cells/" + d.distribution + "_" + task.family + "_" + task.structure + "_M" +
               std::to_string(task.M) + ".csv";
    one.write(config.output_dir / files[i]);
  });

  RunRecord record;
  record.results = ResultTable(header);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    record.results.add_row(row(cells[i], datasets[tasks[i].dist].lml));
  }
  record.outputs = files;
  record.notes.push_back("each M is fitted from a cold start (no warm start across the M sweep)");
  return record;
}

/*
 * Validates, runs and writes results.csv plus manifest.json into
 * config.output_dir.
 */
inline RunRecord run_experiment(const ExperimentConfig &config) {
  config.validate();
  const std::string started = utc_timestamp();
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord record;
  if (config.experiment == "fit") {
    record = run_fit(config);
  } else if (config.experiment == "elbo") {
    record = run_elbo(config);
  } else if (config.experiment == "fig1") {
    record = run_fig1(config);
  } else if (config.experiment == "fig2") {
    record = run_fig2(config);
  } else if (config.experiment == "fig3") {
    record = run_fig3(config);
  } else {
    throw std::invalid_argument("unknown experiment '" + config.experiment + "'");
  }
  record.results.write(config.output_dir / "results.csv");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(config, record, seconds, started);
  return record;
}

} // namespace vof

#endif
