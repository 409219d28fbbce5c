#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "acceptance/criteria.hpp"
#include "vof/experiments.hpp"

namespace {

struct GlobalOptions {
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int threads = 0;
};

vof::ExperimentConfig resolve(const std::string &experiment, const std::string &path,
                              const GlobalOptions &opts) {
  std::optional<vof::Profile> profile;
  if (!opts.profile.empty()) {
    profile = vof::profile_from_string(opts.profile);
  }
  vof::ExperimentConfig config =
      path.empty() ? vof::make_config(experiment, profile.value_or(vof::Profile::Desk))
                   : vof::load_config(path, experiment, profile);
  if (opts.seed) {
    config.seed = *opts.seed;
  }
  if (!opts.out_dir.empty()) {
    config.output_dir = opts.out_dir;
  }
  if (opts.threads > 0) {
    config.threads = opts.threads;
  }
  return config;
}

int run_named(const std::string &experiment, const std::string &path, const GlobalOptions &opts) {
  const auto config = resolve(experiment, path, opts);
  const auto record = vof::run_experiment(config);
  std::cout << experiment << ": " << record.results.rows.size() << " rows -> "
            << (config.output_dir / "results.csv").string() << "\n";
  return 0;
}

int run_acceptance(const GlobalOptions &opts, const std::vector<int> &only) {
  using namespace vof::acceptance;
  vof::ResultTable table({"id", "name", "passed", "seconds", "detail"});
  int failures = 0;
  for (const auto &c : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
      continue;
    }
    const Verdict v = evaluate(c);
    std::cout << format_verdict(v) << std::endl;
    failures += v.passed ? 0 : 1;
    std::string detail = v.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    table.add_row({std::int64_t{v.id}, v.name, std::string(v.passed ? "PASS" : "FAIL"), v.seconds,
                   detail});
  }
  const std::filesystem::path dir = opts.out_dir.empty() ? "runs/acceptance" : opts.out_dir;
  table.write(dir / "results.csv");
  vof::json manifest = {{"experiment", "acceptance"},
                        {"profile", "desk"},
                        {"version", VOF_VERSION_STRING},
                        {"started_utc", vof::utc_timestamp()},
                        {"failures", failures},
                        {"outputs", {"results.csv"}}};
  vof::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "acceptance: " << (failures == 0 ? "all criteria passed"
                                                : std::to_string(failures) + " failed")
            << "\n";
  return failures == 0 ? 0 : 1;
}

int run_gen_data(const std::string &dist, int N, std::uint64_t seed, const std::string &out,
                 const std::string &kernel, double variance, double lengthscale, double noise_sd) {
  const auto k = vof::KernelParams(vof::kernel_family_from_string(kernel), variance, lengthscale);
  const auto data =
      vof::generate_dataset(vof::named_distribution(dist), N, k, noise_sd * noise_sd, seed);
  vof::save_csv(data, out);
  std::cout << data.metadata << " -> " << out << "\n";
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sparse variational GP regression with variational orthogonal features"};
  app.require_subcommand(1);
  GlobalOptions opts;
  app.add_option("--profile", opts.profile, "desk or paper")
      ->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--seed", opts.seed, "master seed");
  app.add_option("--out-dir", opts.out_dir, "output directory");
  app.add_option("--threads", opts.threads, "worker threads for sweep cells")
      ->check(CLI::PositiveNumber);

  std::string config_path;
  for (const char *name : {"fit", "elbo", "fig1", "fig2", "fig3"}) {
    auto *sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->fallthrough();
  }

  std::vector<int> only;
  auto *acc = app.add_subcommand("acceptance", "run the acceptance criteria");
  acc->add_option("--only", only, "criterion ids to run");
  acc->fallthrough();

  std::string dist;
  int N = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string kernel = "se";
  double variance = 0.5;
  double lengthscale = 0.5;
  double noise_sd = 0.01;
  auto *gen = app.add_subcommand("gen-data", "sample a data set from the GP prior");
  gen->add_option("dist", dist, "gaussian, uniform or mixture")
      ->required()
      ->check(CLI::IsMember({"gaussian", "uniform", "mixture"}));
  gen->add_option("N", N, "number of points")->required()->check(CLI::PositiveNumber);
  gen->add_option("seed", seed, "seed")->required();
  gen->add_option("out", out, "output CSV")->required();
  gen->add_option("--kernel", kernel, "se, matern12, matern32 or matern52");
  gen->add_option("--variance", variance, "kernel variance");
  gen->add_option("--lengthscale", lengthscale, "kernel lengthscale");
  gen->add_option("--noise-sd", noise_sd, "observation noise sd");

  CLI11_PARSE(app, argc, argv);

  try {
    if (acc->parsed()) {
      return run_acceptance(opts, only);
    }
    if (gen->parsed()) {
      return run_gen_data(dist, N, seed, out, kernel, variance, lengthscale, noise_sd);
    }
    for (auto *sub : app.get_subcommands()) {
      return run_named(sub->get_name(), config_path, opts);
    }
  } catch (const vof::ParseError &e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
