#ifndef VOF_EXPERIMENTS_RESULTS_HPP
#define VOF_EXPERIMENTS_RESULTS_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vof/errors.hpp"

namespace vof {

inline std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

// Writes to a sibling temporary file, then renames over `path`.
inline void write_file_atomic(const std::filesystem::path &path, const std::string &content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write " + tmp.string());
    }
    out << content;
    if (!out) {
      throw Error("write failed for " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

using Cell = std::variant<double, std::int64_t, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  explicit ResultTable(std::vector<std::string> columns_ = {}) : columns(std::move(columns_)) {}

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
      throw std::invalid_argument("ResultTable: row has " + std::to_string(row.size()) +
                                  " cells, expected " + std::to_string(columns.size()));
    }
    rows.push_back(std::move(row));
  }

  std::size_t column(const std::string &name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) {
        return i;
      }
    }
    throw std::invalid_argument("ResultTable: no column '" + name + "'");
  }

  double number(std::size_t row, const std::string &name) const {
    const Cell &cell = rows.at(row).at(column(name));
    if (const auto *d = std::get_if<double>(&cell)) {
      return *d;
    }
    if (const auto *i = std::get_if<std::int64_t>(&cell)) {
      return static_cast<double>(*i);
    }
    throw std::invalid_argument("ResultTable: column '" + name + "' is not numeric");
  }

  const std::string &text(std::size_t row, const std::string &name) const {
    return std::get<std::string>(rows.at(row).at(column(name)));
  }

  std::string to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      out += (i ? "," : "") + columns[i];
    }
    out += "\n";
    for (const auto &row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) {
          out += ",";
        }
        std::visit(
            [&](const auto &v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                out += format_double(v);
              } else if constexpr (std::is_same_v<T, std::int64_t>) {
                out += std::to_string(v);
              } else {
                out += v;
              }
            },
            row[i]);
      }
      out += "\n";
    }
    return out;
  }

  void write(const std::filesystem::path &path) const { write_file_atomic(path, to_csv()); }
};

} // namespace vof

#endif
