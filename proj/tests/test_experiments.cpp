#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "vof/experiments.hpp"

using namespace vof;

namespace {

std::filesystem::path scratch(const std::string &name) {
  auto p = std::filesystem::temp_directory_path() / ("vof_test_experiments_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double sample_sd(const Eigen::VectorXd &x) {
  const double mean = x.mean();
  return std::sqrt((x.array() - mean).square().sum() / static_cast<double>(x.size() - 1));
}

} // namespace

TEST(test_experiments, csv_parse_examples) {
  std::istringstream good("x,y\n0,1\n");
  const Dataset d = parse_csv(good, "good");
  ASSERT_EQ(d.size(), 1);
  EXPECT_EQ(d.X[0], 0.0);
  EXPECT_EQ(d.y[0], 1.0);

  std::istringstream bad("x,y\na,b\n");
  try {
    parse_csv(bad, "bad.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line, 2u);
    EXPECT_NE(std::string(e.what()).find("bad.csv:2"), std::string::npos);
  }

  std::istringstream header("a,b\n1,2\n");
  EXPECT_THROW(parse_csv(header, "h"), ParseError);
  std::istringstream extra("x,y\n1,2,3\n");
  EXPECT_THROW(parse_csv(extra, "e"), ParseError);
  std::istringstream blank("x,y\n\n1,2\n\n");
  EXPECT_EQ(parse_csv(blank, "b").size(), 1);
}

TEST(test_experiments, missing_file_is_an_error) {
  EXPECT_THROW(load_csv("/nonexistent/vof/data.csv"), Error);
}

TEST(test_experiments, save_load_round_trip) {
  const auto dir = scratch("roundtrip");
  const Dataset d = generate_dataset(InputDistribution::gaussian(3.0), 200,
                                     KernelParams(KernelFamily::Matern32, 1.3, 0.7), 0.01, 17);
  save_csv(d, dir / "d.csv");
  const Dataset e = load_csv(dir / "d.csv");
  ASSERT_EQ(e.size(), d.size());
  EXPECT_LE((e.X - d.X).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((e.y - d.y).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_FALSE(std::filesystem::exists(dir / "d.csv.partial"));
}

TEST(test_experiments, generated_input_moments) {
  const int N = 100000;
  const auto gauss = generate_inputs(named_distribution("gaussian"), N, 1);
  const auto unif = generate_inputs(named_distribution("uniform"), N, 2);
  const auto mix = generate_inputs(named_distribution("mixture"), N, 3);
  EXPECT_NEAR(sample_sd(gauss), 3.0, 0.06);
  const double unif_sd = 2.0 * std::sqrt(108.0) / std::sqrt(12.0);
  EXPECT_NEAR(sample_sd(unif), unif_sd, 0.02 * unif_sd);
  EXPECT_NEAR(sample_sd(mix), 3.0, 0.06);
  EXPECT_LE(unif.cwiseAbs().maxCoeff(), std::sqrt(108.0));
  EXPECT_NEAR(mix.mean(), 0.0, 0.05);
  const auto again = generate_inputs(named_distribution("uniform"), N, 2);
  EXPECT_EQ(unif, again);
}

TEST(test_experiments, config_rejects_unknown_keys) {
  EXPECT_THROW(make_config("fig1", Profile::Desk, json::parse(R"({"grid": {"size": 3}})")),
               std::invalid_argument);
  EXPECT_THROW(make_config("fig1", Profile::Desk, json::parse(R"({"colour": 1})")),
               std::invalid_argument);
  EXPECT_THROW(make_config("nope", Profile::Desk), std::invalid_argument);
  const auto c = make_config("fig1", Profile::Desk, json::parse(R"({"seed": 9, "top": {"a": 4}})"));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.settings["top"]["a"].get<double>(), 4.0);
  EXPECT_EQ(c.settings["top"]["M"].size(), 5u);
}

TEST(test_experiments, config_parse_error_reports_line) {
  try {
    parse_json_text("{\n  \"seed\": 1,\n  oops\n}\n", "cfg.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line, 3u);
  }
}

TEST(test_experiments, config_validation_checks_data_file) {
  auto c = make_config("fit", Profile::Desk,
                       json::parse(R"({"data": {"path": "/nonexistent/vof.csv"}})"));
  EXPECT_THROW(c.validate(), Error);
  auto d = make_config("fit", Profile::Desk, json::parse(R"({"noise_variance": -1})"));
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

namespace {

ExperimentConfig small_fig1(const std::filesystem::path &out) {
  auto c = make_config("fig1", Profile::Desk,
                       json::parse(R"({"grid": {"count": 25}, "top": {"M": [9, 33]},
                                       "bottom": {"a": [2.5, 10]}})"));
  c.output_dir = out;
  return c;
}

} // namespace

TEST(test_experiments, runner_is_deterministic) {
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  run_experiment(small_fig1(a));
  auto cb = small_fig1(b);
  cb.threads = 2;
  run_experiment(cb);
  EXPECT_EQ(slurp(a / "results.csv"), slurp(b / "results.csv"));
  EXPECT_EQ(slurp(a / "cells/cell_0.csv"), slurp(b / "cells/cell_0.csv"));
  EXPECT_TRUE(std::filesystem::exists(a / "manifest.json"));
}

TEST(test_experiments, manifest_replays_run) {
  const auto dir = scratch("replay");
  auto c = make_config("elbo", Profile::Desk,
                       json::parse(R"({"seed": 5, "features": {"M": 8},
                                       "data": {"generator": {"N": 40}}})"));
  c.output_dir = dir / "first";
  run_experiment(c);
  const json manifest = json::parse(slurp(dir / "first" / "manifest.json"));
  EXPECT_EQ(manifest["seed"].get<std::uint64_t>(), 5u);
  EXPECT_TRUE(manifest.contains("version"));
  EXPECT_TRUE(manifest.contains("wall_clock_seconds"));
  auto replay = config_from_manifest(manifest);
  replay.output_dir = dir / "second";
  run_experiment(replay);
  EXPECT_EQ(slurp(dir / "first" / "results.csv"), slurp(dir / "second" / "results.csv"));
}

TEST(test_experiments, elbo_run_is_bounded_by_lml) {
  const auto dir = scratch("elbo");
  auto c = make_config("elbo", Profile::Desk,
                       json::parse(R"({"features": {"M": 10}, "data": {"generator": {"N": 60}}})"));
  c.output_dir = dir;
  const auto rec = run_experiment(c);
  const auto &t = rec.results;
  const double lml = t.number(t.rows.size() - 1, "elbo");
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    EXPECT_LE(t.number(i, "elbo"), lml + 1e-8);
  }
}

TEST(test_experiments, fit_run_writes_outputs) {
  const auto dir = scratch("fit");
  auto c = make_config("fit", Profile::Desk,
                       json::parse(R"({"features": {"M": 10}, "optimizer": {"iterations": 10},
                                       "data": {"generator": {"N": 50}}})"));
  c.output_dir = dir;
  run_experiment(c);
  for (const char *f : {"results.csv", "parameters.csv", "predictions.csv", "manifest.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
}

TEST(test_experiments, fig1_cell_properties) {
  const KernelParams k(KernelFamily::Matern32, 1.0, 0.2);
  const Eigen::VectorXd X = Eigen::VectorXd::LinSpaced(41, -3.0, 3.0);
  const auto small_a = fig1_cell(k, X, 2.5, 129, 1.0, 2.0);
  EXPECT_LT(small_a.max_abs_error_bandlimited, 1e-2);
  const auto coarse = fig1_cell(k, X, 10.0, 9, 1.0, 2.0);
  EXPECT_GT(coarse.edge_center_error_ratio, 1.0);
  double previous = std::numeric_limits<double>::infinity();
  for (int M : {9, 17, 33, 65, 129}) {
    const double e = fig1_cell(k, X, 10.0, M, 1.0, 2.0).max_abs_error;
    EXPECT_LT(e, previous) << "M = " << M;
    previous = e;
  }
}

TEST(test_experiments, fig2_panels_small_scale) {
  json s = default_settings("fig2", Profile::Desk);
  s["N"] = 40;
  s["M"] = 15;
  s["optimizer"]["iterations"] = 300;
  s["optimizer"]["learning_rate"] = 0.01;
  s["elbo_evaluations"] = 20;
  s["grid"]["count"] = 21;
  const auto res = fig2_panels(s, 3, 1);
  ASSERT_EQ(res.panels.size(), 4u);
  const auto &exact = res.panels[3];
  EXPECT_EQ(exact.name, "exact");
  const auto post = ExactPosterior::fit(kernel_from_json(s["kernel"]), res.data.X, res.data.y,
                                        0.03 * 0.03);
  for (Eigen::Index i = 0; i < res.grid.size(); ++i) {
    const auto [m, v] = exact_posterior_predict(post, res.grid[i]);
    EXPECT_EQ(exact.mean[i], m);
    EXPECT_EQ(exact.variance[i], v);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LE(res.panels[i].objective, exact.objective + 1e-8) << res.panels[i].name;
  }
}

TEST(test_experiments, fig2_echoes_noise_sd) {
  const auto dir = scratch("fig2");
  auto c = make_config("fig2", Profile::Desk,
                       json::parse(R"({"N": 20, "M": 7, "optimizer": {"iterations": 5},
                                       "elbo_evaluations": 3, "grid": {"count": 5}})"));
  c.output_dir = dir;
  run_experiment(c);
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest["summary"]["noise_sd"].get<double>(), 0.03);
  EXPECT_EQ(manifest["settings"]["noise_sd"].get<double>(), 0.03);
  EXPECT_TRUE(std::filesystem::exists(dir / "curves.csv"));
}

TEST(test_experiments, fig3_small_scale_bounded) {
  const auto dir = scratch("fig3");
  auto c = make_config("fig3", Profile::Desk,
                       json::parse(R"({"N": 100, "M": [11], "distributions": ["gaussian"],
                                       "hermite": {"refine_iterations": 3},
                                       "trig": {"iterations": 20, "a_grid": [4, 8],
                                                "elbo_evaluations": 5, "minibatch": 50}})"));
  c.output_dir = dir;
  const auto rec = run_experiment(c);
  ASSERT_EQ(rec.results.rows.size(), 4u);
  for (std::size_t i = 0; i < rec.results.rows.size(); ++i) {
    const auto &t = rec.results;
    EXPECT_LE(t.number(i, "elbo"), t.number(i, "lml") + 3.0 * t.number(i, "elbo_se") + 1e-8);
  }
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  EXPECT_FALSE(manifest["notes"].empty());
}
