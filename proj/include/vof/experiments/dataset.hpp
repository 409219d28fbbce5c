#ifndef VOF_EXPERIMENTS_DATASET_HPP
#define VOF_EXPERIMENTS_DATASET_HPP

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vof/errors.hpp"
#include "vof/exact_gp.hpp"
#include "vof/experiments/results.hpp"
#include "vof/inputs.hpp"

namespace vof {

struct Dataset {
  Eigen::VectorXd X;
  Eigen::VectorXd y;
  std::string metadata;

  Eigen::Index size() const { return X.size(); }

  void validate() const {
    if (X.size() != y.size()) {
      throw std::invalid_argument("Dataset: X and y differ in length");
    }
    if (!X.allFinite() || !y.allFinite()) {
      throw std::invalid_argument("Dataset: values must be finite");
    }
  }
};

namespace detail {

inline std::string trim(const std::string &s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline bool parse_double(const std::string &text, double &out) {
  const std::string t = trim(text);
  if (t.empty()) {
    return false;
  }
  char *end = nullptr;
  errno = 0;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && errno != ERANGE && std::isfinite(out);
}

} // namespace detail

// Two-column CSV with header "x,y"; blank lines are skipped.
inline Dataset parse_csv(std::istream &in, const std::string &source) {
  std::string line;
  std::size_t number = 0;
  bool header = false;
  std::vector<double> xs;
  std::vector<double> ys;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = detail::trim(line);
    if (!header) {
      if (t != "x,y") {
        throw ParseError(source + ":" + std::to_string(number) + ": expected header \"x,y\"",
                         number);
      }
      header = true;
      continue;
    }
    if (t.empty()) {
      continue;
    }
    const auto comma = t.find(',');
    double x = 0.0;
    double y = 0.0;
    if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos ||
        !detail::parse_double(t.substr(0, comma), x) ||
        !detail::parse_double(t.substr(comma + 1), y)) {
      throw ParseError(source + ":" + std::to_string(number) + ": malformed row \"" + t + "\"",
                       number);
    }
    xs.push_back(x);
    ys.push_back(y);
  }
  if (!header) {
    throw ParseError(source + ": empty file", 1);
  }
  Dataset out{Eigen::VectorXd::Map(xs.data(), static_cast<Eigen::Index>(xs.size())),
              Eigen::VectorXd::Map(ys.data(), static_cast<Eigen::Index>(ys.size())),
              "csv:" + source};
  return out;
}

inline Dataset load_csv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("load_csv: cannot open " + path.string());
  }
  return parse_csv(in, path.string());
}

inline std::string dataset_to_csv(const Dataset &data) {
  data.validate();
  std::string out = "x,y\n";
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    out += format_double(data.X[n]) + "," + format_double(data.y[n]) + "\n";
  }
  return out;
}

inline void save_csv(const Dataset &data, const std::filesystem::path &path) {
  write_file_atomic(path, dataset_to_csv(data));
}

// Inputs from `dist`, outputs from the GP prior with the given kernel and noise.
inline Dataset generate_dataset(const InputDistribution &dist, int N, const KernelParams &kernel,
                                double noise_variance, std::uint64_t seed) {
  Dataset out;
  out.X = generate_inputs(dist, N, derive_seed(seed, {0}));
  out.y = sample_prior(kernel, out.X, noise_variance, derive_seed(seed, {1}));
  std::ostringstream meta;
  meta.precision(17);
  meta << "generated: inputs=" << dist.name() << " N=" << N << " kernel=" << to_string(kernel.family())
       << " variance=" << kernel.variance() << " lengthscale=" << kernel.lengthscale()
       << " noise_variance=" << noise_variance << " seed=" << seed;
  out.metadata = meta.str();
  return out;
}

} // namespace vof

#endif
