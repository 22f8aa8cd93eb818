#pragma once

// Dataset files: a headerless CSV with one matrix row per line ("%.17g"),
// plus a JSON ground-truth sidecar {A0, S, sigma2, seed}.

#include <sca/core.hpp>
#include <sca/synthetic.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace sca {

inline std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_matrix_csv(std::ostream& os, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

inline void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_matrix_csv(os, m);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw std::runtime_error(path.string() + ": bad number '" + cell + "' on row " + std::to_string(rows.size()));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path.string() + ": ragged row " + std::to_string(rows.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty()) throw std::runtime_error("matrix JSON must be a non-empty array of rows");
  const auto cols = rows.front().size();
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw std::runtime_error("matrix JSON has ragged rows");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j].get<double>();
  }
  return m;
}

inline nlohmann::json truth_to_json(const GroundTruth& truth, std::uint64_t seed) {
  return {{"A0", matrix_to_json(truth.A0)}, {"S", matrix_to_json(truth.S)}, {"sigma2", truth.sigma2}, {"seed", seed}};
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
  GroundTruth truth;
  truth.A0 = matrix_from_json(j.at("A0"));
  truth.S = matrix_from_json(j.at("S"));
  truth.sigma2 = j.at("sigma2").get<double>();
  return truth;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(1) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(is);
}

/// Writes `<dir>/data.csv` and, when ground truth exists, `<dir>/truth.json`.
inline void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "data.csv", data.Y);
  if (data.truth) write_json(dir / "truth.json", truth_to_json(*data.truth, data.seed));
}

/// Loads a data CSV; picks up a `truth.json` sidecar in the same directory
/// unless an explicit truth path is given.
inline Dataset load_dataset(const std::filesystem::path& csv, const std::filesystem::path& truth_path = {}) {
  Dataset data;
  data.Y = read_matrix_csv(csv);
  std::filesystem::path sidecar = truth_path.empty() ? csv.parent_path() / "truth.json" : truth_path;
  if (std::filesystem::exists(sidecar)) {
    const auto j = read_json(sidecar);
    data.truth = truth_from_json(j);
    data.seed = j.value("seed", std::uint64_t{0});
  } else if (!truth_path.empty()) {
    throw std::runtime_error("cannot open " + truth_path.string());
  }
  return data;
}

}  // namespace sca
