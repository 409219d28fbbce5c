#ifndef VOF_EXPERIMENTS_CONFIG_HPP
#define VOF_EXPERIMENTS_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "vof/errors.hpp"
#include "vof/features.hpp"
#include "vof/inputs.hpp"
#include "vof/training.hpp"

namespace vof {

using json = nlohmann::json;

enum class Profile { Desk, Paper };

inline std::string to_string(Profile p) { return p == Profile::Desk ? "desk" : "paper"; }

inline Profile profile_from_string(const std::string &name) {
  if (name == "desk") {
    return Profile::Desk;
  }
  if (name == "paper") {
    return Profile::Paper;
  }
  throw std::invalid_argument("unknown profile '" + name + "'");
}

inline const std::vector<std::string> &experiment_names() {
  static const std::vector<std::string> names = {"fit", "elbo", "fig1", "fig2", "fig3"};
  return names;
}

namespace detail {

inline json kernel_json(const std::string &family, double variance, double lengthscale) {
  return {{"family", family}, {"variance", variance}, {"lengthscale", lengthscale}};
}

inline json optimizer_json(const std::string &method, double lr, int iterations,
                           const std::string &gradient) {
  return {{"method", method},
          {"learning_rate", lr},
          {"iterations", iterations},
          {"minibatch", 0},
          {"gradient", gradient},
          {"fd_step", 1e-5},
          {"trace_every", 1},
          {"lbfgs_memory", 10},
          {"grid_parameter", ""},
          {"grid_values", json::array()},
          {"grid_evaluations", 1}};
}

} // namespace detail

/*
 * Complete settings for an experiment under a profile. A config file may
 * override any of these keys; unknown keys are rejected.
 */
inline json default_settings(const std::string &experiment, Profile profile) {
  const bool paper = profile == Profile::Paper;
  if (experiment == "fit" || experiment == "elbo") {
    return {
        {"kernel", detail::kernel_json("se", 1.0, 1.0)},
        {"features",
         {{"family", "hermite"},
          {"M", 20},
          {"r", 1.0},
          {"a", 5.0},
          {"input_sd", 1.0},
          {"Z", json::array()},
          {"structure", "dense"}}},
        {"noise_variance", 0.1},
        {"objective",
         {{"kind", "collapsed"},
          {"mc_samples", 50},
          {"trainable",
           {{"variance", true},
            {"lengthscale", true},
            {"noise", true},
            {"feature", true},
            {"q", true}}}}},
        {"optimizer", detail::optimizer_json("lbfgs", 1.0, 200, "finite_difference")},
        {"data",
         {{"path", ""},
          {"generator",
           {{"inputs", {{"kind", "gaussian"}, {"sd", 3.0}}},
            {"N", 200},
            {"kernel", detail::kernel_json("se", 1.0, 1.0)},
            {"noise_variance", 0.01}}}}},
        {"predict", {{"lo", -5.0}, {"hi", 5.0}, {"count", 201}, {"quadrature_order", 0}}},
        {"elbo_evaluations", paper ? 5000 : 500},
    };
  }
  if (experiment == "fig1") {
    return {
        {"kernel", detail::kernel_json("matern32", 1.0, 0.2)},
        {"grid", {{"lo", -3.0}, {"hi", 3.0}, {"count", paper ? 201 : 61}}},
        {"top", {{"a", 10.0}, {"M", {9, 17, 33, 65, 129}}}},
        {"bottom", {{"M", 31}, {"a", {1.0, 2.5, 5.0, 10.0, 20.0}}}},
        {"center_halfwidth", 1.0},
        {"edge_start", 2.0},
    };
  }
  if (experiment == "fig2") {
    json opt = detail::optimizer_json("adam", 5e-4, paper ? 30000 : 3000, "supplied");
    opt["trace_every"] = 100;
    return {
        {"kernel", detail::kernel_json("matern52", 1.0, 0.2)},
        {"noise_sd", 0.03},
        {"N", 80},
        {"inputs", {{"kind", "uniform"}, {"lo", -3.0}, {"hi", 3.0}}},
        {"M", 31},
        {"mc_samples", 50},
        {"a_small", 2.0},
        {"a_large", 40.0},
        {"a_start", 8.0},
        {"optimizer", opt},
        {"grid", {{"lo", -3.5}, {"hi", 3.5}, {"count", 281}}},
        {"elbo_evaluations", paper ? 5000 : 500},
    };
  }
  if (experiment == "fig3") {
    return {
        {"kernel", detail::kernel_json("se", 0.5, 0.5)},
        {"noise_sd", 0.01},
        {"N", 1000},
        {"distributions", {"gaussian", "uniform", "mixture"}},
        {"families", {"hermite", "trig"}},
        {"structures", {"dense", "diagonal"}},
        {"M", {11, 15, 21, 25, 31, 35, 41, 45, 51, 55, 61, 65, 71}},
        {"hermite",
         {{"input_sd_grid", {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0}},
          {"refine_iterations", 30},
          {"train_hyperparameters", paper}}},
        {"trig",
         {{"a_grid", {2.0, 4.0, 6.0, 8.0, 12.0, 16.0}},
          {"mc_samples", 50},
          {"iterations", paper ? 30000 : 3000},
          {"learning_rate", 5e-4},
          {"minibatch", paper ? 0 : 100},
          {"elbo_evaluations", paper ? 5000 : 500},
          {"train_hyperparameters", paper}}},
        {"exact", {{"fit_hyperparameters", paper}, {"iterations", 100}}},
    };
  }
  throw std::invalid_argument("unknown experiment '" + experiment + "'");
}

namespace detail {

// Objects carrying a "kind" key are tagged unions and accept any keys.
inline void check_known_keys(const json &defaults, const json &overrides, const std::string &at) {
  if (!overrides.is_object()) {
    return;
  }
  for (const auto &[key, value] : overrides.items()) {
    const std::string path = at.empty() ? key : at + "." + key;
    if (!defaults.contains(key)) {
      throw std::invalid_argument("unknown setting '" + path + "'");
    }
    const json &d = defaults.at(key);
    if (d.is_object() && !d.contains("kind")) {
      check_known_keys(d, value, path);
    }
  }
}

} // namespace detail

struct ExperimentConfig {
  std::string experiment;
  Profile profile = Profile::Desk;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  int threads = 1;
  // fully resolved settings
  json settings;
  // verbatim text of the config file, if any
  std::string source_text;
  // base for relative data paths
  std::filesystem::path source_dir;

  json to_json() const {
    return {{"experiment", experiment},
            {"profile", to_string(profile)},
            {"seed", seed},
            {"settings", settings}};
  }

  void validate() const;
};

/*
 * Resolves a config: defaults for (experiment, profile), then the keys of
 * `overrides` that are not one of experiment / profile / seed / output_dir
 * / threads.
 */
inline ExperimentConfig make_config(const std::string &experiment, Profile profile,
                                    const json &overrides = json::object()) {
  ExperimentConfig config;
  config.experiment = experiment;
  config.profile = profile;
  config.settings = default_settings(experiment, profile);
  json patch = overrides.is_null() ? json::object() : overrides;
  if (!patch.is_object()) {
    throw std::invalid_argument("config: top level must be an object");
  }
  for (const char *meta : {"experiment", "profile", "seed", "output_dir", "threads"}) {
    patch.erase(meta);
  }
  detail::check_known_keys(config.settings, patch, "");
  config.settings.merge_patch(patch);
  config.output_dir = std::filesystem::path("runs") / experiment;
  if (overrides.is_object()) {
    if (overrides.contains("seed")) {
      config.seed = overrides.at("seed").get<std::uint64_t>();
    }
    if (overrides.contains("output_dir")) {
      config.output_dir = overrides.at("output_dir").get<std::string>();
    }
    if (overrides.contains("threads")) {
      config.threads = overrides.at("threads").get<int>();
    }
  }
  return config;
}

inline json parse_json_text(const std::string &text, const std::string &source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    // byte offset -> line number
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + static_cast<std::size_t>(
                              std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    throw ParseError(source + ":" + std::to_string(line) + ": " + e.what(), line);
  }
}

/*
 * Loads a config file. The experiment comes from the file's "experiment"
 * key unless `experiment` is given; the profile from `profile`, else the
 * file, else desk.
 */
inline ExperimentConfig load_config(const std::filesystem::path &path,
                                    std::optional<std::string> experiment = std::nullopt,
                                    std::optional<Profile> profile = std::nullopt) {
  std::ifstream in(path);
  if (!in) {
    throw Error("config: cannot open " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const json doc = parse_json_text(text, path.string());
  if (!doc.is_object()) {
    throw ParseError(path.string() + ": top level must be an object", 1);
  }
  std::string name;
  if (experiment) {
    name = *experiment;
  } else if (doc.contains("experiment")) {
    name = doc.at("experiment").get<std::string>();
  } else {
    throw std::invalid_argument("config: no experiment given in " + path.string());
  }
  Profile p = Profile::Desk;
  if (profile) {
    p = *profile;
  } else if (doc.contains("profile")) {
    p = profile_from_string(doc.at("profile").get<std::string>());
  }
  ExperimentConfig config = make_config(name, p, doc);
  config.source_text = text;
  config.source_dir = path.parent_path();
  return config;
}

// Rebuilds the config recorded in a run manifest.
inline ExperimentConfig config_from_manifest(const json &manifest) {
  ExperimentConfig config =
      make_config(manifest.at("experiment").get<std::string>(),
                  profile_from_string(manifest.at("profile").get<std::string>()));
  config.settings = manifest.at("settings");
  config.seed = manifest.at("seed").get<std::uint64_t>();
  if (manifest.contains("source_dir")) {
    config.source_dir = manifest.at("source_dir").get<std::string>();
  }
  return config;
}

inline KernelParams kernel_from_json(const json &j) {
  return KernelParams(kernel_family_from_string(j.at("family").get<std::string>()),
                      j.at("variance").get<double>(), j.at("lengthscale").get<double>());
}

inline InputDistribution input_distribution_from_json(const json &j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") {
    return InputDistribution::gaussian(j.value("sd", 1.0));
  }
  if (kind == "uniform") {
    return InputDistribution::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  }
  if (kind == "mixture") {
    if (j.contains("weights")) {
      return InputDistribution::mixture(j.at("weights").get<std::vector<double>>(),
                                        j.at("means").get<std::vector<double>>(),
                                        j.at("sds").get<std::vector<double>>());
    }
    return InputDistribution::standardized_bimodal(j.value("sd", 3.0));
  }
  throw std::invalid_argument("unknown input distribution '" + kind + "'");
}

// The three covariate distributions of the mean-field study, all with sd 3.
inline InputDistribution named_distribution(const std::string &name) {
  if (name == "gaussian") {
    return InputDistribution::gaussian(3.0);
  }
  if (name == "uniform") {
    return InputDistribution::uniform(-std::sqrt(108.0), std::sqrt(108.0));
  }
  if (name == "mixture") {
    return InputDistribution::standardized_bimodal(3.0);
  }
  throw std::invalid_argument("unknown input distribution '" + name + "'");
}

inline VariationalDistribution::Structure structure_from_string(const std::string &name) {
  if (name == "dense") {
    return VariationalDistribution::Structure::Dense;
  }
  if (name == "diagonal") {
    return VariationalDistribution::Structure::Diagonal;
  }
  throw std::invalid_argument("unknown covariance structure '" + name + "'");
}

inline GradientMode gradient_mode_from_string(const std::string &name) {
  if (name == "finite_difference") {
    return GradientMode::FiniteDifference;
  }
  if (name == "supplied") {
    return GradientMode::Supplied;
  }
  throw std::invalid_argument("unknown gradient mode '" + name + "'");
}

/*
 * Feature family from the "features" block. Inducing points default to M
 * locations spread evenly over `input_range` when Z is empty.
 */
inline FeatureFamily features_from_json(const json &j, const KernelParams &kernel,
                                        std::pair<double, double> input_range = {-3.0, 3.0}) {
  const std::string family = j.at("family").get<std::string>();
  const int M = j.at("M").get<int>();
  if (family == "hermite") {
    return HermiteVOF(M, j.at("r").get<double>(), kernel);
  }
  if (family == "trig") {
    return TrigVOF(M, j.at("a").get<double>(), kernel);
  }
  if (family == "eigenfunction") {
    return EigenfunctionFeatures(M, j.at("input_sd").get<double>(), kernel);
  }
  if (family == "inducing_points") {
    const auto z = j.at("Z").get<std::vector<double>>();
    Eigen::VectorXd Z =
        z.empty() ? Eigen::VectorXd::LinSpaced(M, input_range.first, input_range.second).eval()
                  : Eigen::VectorXd::Map(z.data(), static_cast<Eigen::Index>(z.size())).eval();
    return InducingPoints(Z, kernel);
  }
  throw std::invalid_argument("unknown feature family '" + family + "'");
}

inline OptimizerConfig optimizer_from_json(const json &j, std::uint64_t seed) {
  OptimizerConfig c;
  c.method = optimizer_method_from_string(j.at("method").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.iterations = j.at("iterations").get<int>();
  c.minibatch = j.at("minibatch").get<int>();
  c.gradient = gradient_mode_from_string(j.at("gradient").get<std::string>());
  c.fd_step = j.at("fd_step").get<double>();
  c.trace_every = j.at("trace_every").get<int>();
  c.lbfgs_memory = j.at("lbfgs_memory").get<int>();
  c.grid_parameter = j.at("grid_parameter").get<std::string>();
  c.grid_values = j.at("grid_values").get<std::vector<double>>();
  c.grid_evaluations = j.at("grid_evaluations").get<int>();
  c.seed = seed;
  c.validate();
  return c;
}

inline ObjectiveSpec objective_from_json(const json &j) {
  ObjectiveSpec spec;
  spec.kind = objective_kind_from_string(j.at("kind").get<std::string>());
  spec.mc_samples = j.at("mc_samples").get<int>();
  const json &t = j.at("trainable");
  spec.trainable.variance = t.at("variance").get<bool>();
  spec.trainable.lengthscale = t.at("lengthscale").get<bool>();
  spec.trainable.noise = t.at("noise").get<bool>();
  spec.trainable.feature = t.at("feature").get<bool>();
  spec.trainable.q = t.at("q").get<bool>();
  if (spec.mc_samples < 1) {
    throw std::invalid_argument("objective: mc_samples must be >= 1");
  }
  return spec;
}

inline std::filesystem::path resolve_data_path(const ExperimentConfig &config) {
  std::filesystem::path p = config.settings.at("data").at("path").get<std::string>();
  if (p.is_relative() && !config.source_dir.empty()) {
    p = config.source_dir / p;
  }
  return p;
}

/*
 * Checks that referenced files exist and that every typed block parses
 * with its positivity constraints.
 */
inline void ExperimentConfig::validate() const {
  if (threads < 1) {
    throw std::invalid_argument("config: threads must be >= 1");
  }
  const json &s = settings;
  const KernelParams kernel = kernel_from_json(s.at("kernel"));
  if (experiment == "fit" || experiment == "elbo") {
    if (!(s.at("noise_variance").get<double>() > 0.0)) {
      throw std::invalid_argument("config: noise_variance must be > 0");
    }
    features_from_json(s.at("features"), kernel);
    structure_from_string(s.at("features").at("structure").get<std::string>());
    objective_from_json(s.at("objective"));
    optimizer_from_json(s.at("optimizer"), seed);
    if (!s.at("data").at("path").get<std::string>().empty()) {
      const auto p = resolve_data_path(*this);
      if (!std::filesystem::exists(p)) {
        throw Error("config: data file " + p.string() + " does not exist");
      }
    } else {
      const json &g = s.at("data").at("generator");
      input_distribution_from_json(g.at("inputs"));
      kernel_from_json(g.at("kernel"));
      if (!(g.at("noise_variance").get<double>() > 0.0) || g.at("N").get<int>() < 1) {
        throw std::invalid_argument("config: generator needs N >= 1 and noise_variance > 0");
      }
    }
  } else if (experiment == "fig2" || experiment == "fig3") {
    if (!(s.at("noise_sd").get<double>() > 0.0) || s.at("N").get<int>() < 1) {
      throw std::invalid_argument("config: noise_sd must be > 0 and N >= 1");
    }
    if (experiment == "fig2") {
      input_distribution_from_json(s.at("inputs"));
      optimizer_from_json(s.at("optimizer"), seed);
      for (const char *key : {"a_small", "a_large", "a_start"}) {
        if (!(s.at(key).get<double>() > 0.0)) {
          throw std::invalid_argument(std::string("config: ") + key + " must be > 0");
        }
      }
    } else {
      for (const auto &d : s.at("distributions")) {
        named_distribution(d.get<std::string>());
      }
      for (const auto &st : s.at("structures")) {
        structure_from_string(st.get<std::string>());
      }
    }
  } else if (experiment == "fig1") {
    if (s.at("grid").at("count").get<int>() < 2) {
      throw std::invalid_argument("config: grid needs at least 2 points");
    }
  }
}

} // namespace vof

#endif
