#pragma once

// Monte Carlo sweeps over synthetic cells. A grid is a flat JSON object:
//
//   {
//     "dims": [[10, 5], [20, 10]],       (M, N) pairs
//     "T": [1000],
//     "snr_db": [20, 30, 40],
//     "noiseless": false,                adds one noiseless cell per (M, N, T)
//     "trials": 20,
//     "seed_base": 1,
//     "cond_max": 100,
//     "sigma_source": "estimate",        or "true" (generator's sigma)
//     "algorithms": [
//       {"name": "sisal", "lambda": 0.1},
//       {"name": "pr-sisal", "tau": 1},
//       {"name": "init"}
//     ]
//   }
//
// Trial t of cell g draws its data (and the initializer's tie-breaks) from
// seed derive_stream(derive_stream(seed_base, g), t), so every row depends
// only on the grid. Jobs run on a small thread pool and are merged back in
// (cell, trial, algorithm) order.

#include <sca/core.hpp>
#include <sca/data_io.hpp>
#include <sca/metrics.hpp>
#include <sca/pipeline.hpp>
#include <sca/rng.hpp>
#include <sca/synthetic.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace sca {

struct AlgorithmEntry {
  Algorithm algorithm = Algorithm::sisal;
  UnmixOptions options;  // n, sigma and init_seed are filled per trial
  double lambda_or_tau = std::numeric_limits<double>::quiet_NaN();
};

struct BenchGrid {
  std::vector<std::pair<int, int>> dims;
  std::vector<int> T_list;
  std::vector<double> snr_db_list;
  bool noiseless = false;
  int trials = 1;
  std::vector<AlgorithmEntry> algorithms;
  std::uint64_t seed_base = 0;
  double cond_max = 100.0;
  bool true_sigma = false;
};

struct BenchCell {
  int M = 0, N = 0, T = 0;
  double snr_db = 0.0;
  bool noiseless = false;
};

struct ResultRow {
  int M = 0, N = 0, T = 0;
  double snr_db = 0.0;
  int trial = 0;
  std::string algorithm;
  double lambda_or_tau = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
  double sad_mean_deg = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0.0;
  std::string termination;
  double objective_final = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

template <class T>
T take(const nlohmann::json& j, const char* key, T fallback, std::set<std::string>& seen) {
  seen.insert(key);
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& seen, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!seen.count(it.key())) throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
}

inline AlgorithmEntry parse_algorithm_entry(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("name")) throw std::invalid_argument("grid: algorithm entries need a name");
  std::set<std::string> seen{"name"};
  const std::string name = j.at("name").get<std::string>();
  const auto alg = parse_algorithm(name);
  if (!alg) throw std::invalid_argument("grid: unknown algorithm '" + name + "'");
  AlgorithmEntry e;
  e.algorithm = *alg;
  UnmixOptions& o = e.options;
  o.algorithm = *alg;
  o.expansion = take(j, "expansion", kDefaultExpansion, seen);
  o.normalize = take(j, "normalize", false, seen);
  if (j.contains("anchor_method")) {
    const std::string m = j.at("anchor_method").get<std::string>();
    if (m == "pinv") o.anchor = AnchorMethod::pinv;
    else if (m == "second-order") o.anchor = AnchorMethod::second_order;
    else throw std::invalid_argument("grid: unknown anchor_method '" + m + "'");
  }
  seen.insert("anchor_method");
  switch (*alg) {
    case Algorithm::sisal: {
      SisalConfig& c = o.sisal;
      c.lambda = take(j, "lambda", c.lambda, seen);
      c.mu = take(j, "mu", c.mu, seen);
      c.max_outer = take(j, "max_outer", c.max_outer, seen);
      const std::string ls = take<std::string>(j, "line_search", to_string(c.line_search), seen);
      if (ls != "armijo" && ls != "legacy") throw std::invalid_argument("grid: unknown line_search '" + ls + "'");
      c.line_search = ls == "armijo" ? LineSearch::armijo : LineSearch::legacy;
      c.admm.rho = take(j, "rho", c.admm.rho, seen);
      c.admm.max_iter = take(j, "admm_max_iter", c.admm.max_iter, seen);
      validate(c);
      e.lambda_or_tau = c.lambda;
      break;
    }
    case Algorithm::h2sisal: {
      H2Config& c = o.h2;
      c.lambda = take(j, "lambda", c.lambda, seen);
      c.pg.beta = take(j, "beta", c.pg.beta, seen);
      c.pg.rc_tol = take(j, "rc_tol", c.pg.rc_tol, seen);
      c.pg.max_iter = take(j, "max_iter", c.pg.max_iter, seen);
      c.pg.extrapolate = take(j, "extrapolate", c.pg.extrapolate, seen);
      const std::string a = take<std::string>(j, "decrease_anchor", to_string(c.pg.anchor), seen);
      c.pg.anchor = a == "current" ? DecreaseAnchor::current : DecreaseAnchor::extrapolated;
      validate(c.pg);
      e.lambda_or_tau = c.lambda;
      break;
    }
    case Algorithm::prsisal: {
      PrConfig& c = o.pr;
      c.tau = take(j, "tau", c.tau, seen);
      c.eta0 = take(j, "eta0", c.eta0, seen);
      c.eta_growth = take(j, "eta_growth", c.eta_growth, seen);
      c.outer_max = take(j, "outer_max", c.outer_max, seen);
      c.inner_max = take(j, "inner_max", c.inner_max, seen);
      c.inner_rc_tol = take(j, "inner_rc_tol", c.inner_rc_tol, seen);
      validate(c);
      e.lambda_or_tau = c.tau;
      break;
    }
    case Algorithm::prsisal_pg:
    case Algorithm::prsisal_epg: {
      PrDirectConfig& c = o.pr_direct;
      c.tau = take(j, "tau", c.tau, seen);
      c.pg.rc_tol = take(j, "rc_tol", c.pg.rc_tol, seen);
      c.pg.max_iter = take(j, "max_iter", c.pg.max_iter, seen);
      c.pg.beta = take(j, "beta", c.pg.beta, seen);
      detail::require(c.tau > 0.0, "grid: tau must be positive");
      validate(c.pg);
      e.lambda_or_tau = c.tau;
      break;
    }
    case Algorithm::init: break;
  }
  reject_unknown(j, seen, "grid algorithm '" + name + "'");
  return e;
}

}  // namespace detail

inline BenchGrid parse_grid(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("grid: top level must be an object");
  std::set<std::string> seen;
  BenchGrid g;
  seen.insert("dims");
  if (!j.contains("dims") || !j.at("dims").is_array() || j.at("dims").empty())
    throw std::invalid_argument("grid: 'dims' must be a non-empty list of [M, N]");
  for (const auto& d : j.at("dims")) {
    if (!d.is_array() || d.size() != 2) throw std::invalid_argument("grid: each dims entry is [M, N]");
    g.dims.emplace_back(d[0].get<int>(), d[1].get<int>());
  }
  g.T_list = detail::take(j, "T", std::vector<int>{1000}, seen);
  g.snr_db_list = detail::take(j, "snr_db", std::vector<double>{}, seen);
  g.noiseless = detail::take(j, "noiseless", false, seen);
  g.trials = detail::take(j, "trials", 1, seen);
  g.seed_base = detail::take<std::uint64_t>(j, "seed_base", 0, seen);
  g.cond_max = detail::take(j, "cond_max", 100.0, seen);
  const std::string src = detail::take<std::string>(j, "sigma_source", "estimate", seen);
  if (src != "estimate" && src != "true") throw std::invalid_argument("grid: sigma_source must be 'estimate' or 'true'");
  g.true_sigma = src == "true";
  seen.insert("algorithms");
  if (!j.contains("algorithms") || !j.at("algorithms").is_array() || j.at("algorithms").empty())
    throw std::invalid_argument("grid: 'algorithms' must be a non-empty list");
  for (const auto& a : j.at("algorithms")) g.algorithms.push_back(detail::parse_algorithm_entry(a));
  detail::reject_unknown(j, seen, "grid");

  detail::require(g.trials >= 1, "grid: trials must be >= 1");
  detail::require(!g.T_list.empty(), "grid: 'T' must not be empty");
  detail::require(!g.snr_db_list.empty() || g.noiseless, "grid: need snr_db values or noiseless");
  for (auto [m, n] : g.dims) detail::require(n >= 2 && m >= n, "grid: dims need M >= N >= 2");
  return g;
}

/// Cells in (dims, T, snr) order; the noiseless cell, if any, comes after
/// the finite SNRs of its (M, N, T).
inline std::vector<BenchCell> cells(const BenchGrid& g) {
  std::vector<BenchCell> out;
  for (auto [m, n] : g.dims)
    for (int t : g.T_list) {
      for (double snr : g.snr_db_list) out.push_back({m, n, t, snr, false});
      if (g.noiseless) out.push_back({m, n, t, kInf, true});
    }
  return out;
}

inline std::uint64_t trial_seed(std::uint64_t seed_base, std::size_t cell, int trial) {
  return derive_stream(derive_stream(seed_base, cell), static_cast<std::uint64_t>(trial));
}

/// One trial of one cell: a fresh dataset and one row per algorithm entry.
inline std::vector<ResultRow> run_trial(const BenchGrid& g, const BenchCell& cell, std::size_t cell_index, int trial) {
  std::vector<ResultRow> rows;
  ResultRow base;
  base.M = cell.M;
  base.N = cell.N;
  base.T = cell.T;
  base.snr_db = cell.snr_db;
  base.trial = trial;

  SynthSpec spec;
  spec.M = cell.M;
  spec.N = cell.N;
  spec.T = cell.T;
  spec.snr_db = cell.noiseless ? 0.0 : cell.snr_db;
  spec.noiseless = cell.noiseless;
  spec.cond_max = g.cond_max;
  spec.seed = trial_seed(g.seed_base, cell_index, trial);

  std::optional<Dataset> data;
  std::string data_error;
  try {
    data = generate(spec);
  } catch (const std::exception& e) {
    data_error = std::string("error: ") + e.what();
  }

  for (const AlgorithmEntry& entry : g.algorithms) {
    ResultRow row = base;
    row.algorithm = to_string(entry.algorithm);
    row.lambda_or_tau = entry.lambda_or_tau;
    if (!data) {
      row.termination = data_error;
      rows.push_back(row);
      continue;
    }
    try {
      UnmixOptions opt = entry.options;
      opt.n = cell.N;
      opt.init_seed = spec.seed;
      if (g.true_sigma || cell.M == cell.N) opt.sigma = std::sqrt(data->truth->sigma2);
      const UnmixResult r = unmix(data->Y, opt);
      row.mse = mse(data->truth->A0, r.A_hat).score;
      row.sad_mean_deg = radians_to_degrees(sad(data->truth->A0, r.A_hat).score);
      row.wall_ms = r.report.wall_ms;
      row.termination = r.report.termination;
      row.objective_final = r.report.final_objective();
    } catch (const std::exception& e) {
      row.termination = std::string("error: ") + e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

/// Worker count: `requested` (0 = hardware concurrency), capped by the
/// SIMPLEX_UNMIX_THREADS environment variable when it holds a positive integer.
inline int resolve_threads(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SIMPLEX_UNMIX_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min<long>(n, cap);
  }
  return std::max(1, n);
}

inline std::vector<ResultRow> run_bench(const BenchGrid& g, int threads) {
  const std::vector<BenchCell> cs = cells(g);
  const std::size_t jobs = cs.size() * static_cast<std::size_t>(g.trials);
  std::vector<std::vector<ResultRow>> buffers(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs; k = next++) {
      const std::size_t c = k / static_cast<std::size_t>(g.trials);
      const int t = static_cast<int>(k % static_cast<std::size_t>(g.trials));
      buffers[k] = run_trial(g, cs[c], c, t);
    }
  };
  const int n = std::min<int>(std::max(1, threads), static_cast<int>(std::max<std::size_t>(1, jobs)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::vector<ResultRow> rows;
  for (auto& b : buffers) rows.insert(rows.end(), b.begin(), b.end());
  return rows;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_number(double x) { return std::isnan(x) ? std::string() : format_double(x); }

inline constexpr const char* kResultHeader =
    "M,N,T,snr_db,trial,algorithm,lambda_or_tau,mse,sad_mean_deg,wall_ms,termination,objective_final";

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kResultHeader << '\n';
  for (const auto& r : rows)
    os << r.M << ',' << r.N << ',' << r.T << ',' << csv_number(r.snr_db) << ',' << r.trial << ',' << r.algorithm << ','
       << csv_number(r.lambda_or_tau) << ',' << csv_number(r.mse) << ',' << csv_number(r.sad_mean_deg) << ','
       << csv_number(r.wall_ms) << ',' << csv_field(r.termination) << ',' << csv_number(r.objective_final) << '\n';
}

struct AggregateRow {
  int M = 0, N = 0, T = 0;
  double snr_db = 0.0;
  std::string algorithm;
  double lambda_or_tau = std::numeric_limits<double>::quiet_NaN();
  int trials = 0;
  int failures = 0;
  double mse_mean = std::numeric_limits<double>::quiet_NaN();
  double mse_std = std::numeric_limits<double>::quiet_NaN();
  double mse_median = std::numeric_limits<double>::quiet_NaN();
  double sad_mean_deg = std::numeric_limits<double>::quiet_NaN();
  double wall_ms_median = std::numeric_limits<double>::quiet_NaN();
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Per (cell, algorithm entry) statistics over successful trials; std is the
/// sample standard deviation (n - 1).
inline std::vector<AggregateRow> aggregate(const BenchGrid& g, const std::vector<ResultRow>& rows) {
  const std::size_t n_alg = g.algorithms.size();
  const std::size_t per_cell = n_alg * static_cast<std::size_t>(g.trials);
  const std::size_t n_cells = per_cell ? rows.size() / per_cell : 0;
  std::vector<AggregateRow> out;
  for (std::size_t c = 0; c < n_cells; ++c)
    for (std::size_t a = 0; a < n_alg; ++a) {
      std::vector<double> mses, sads, walls;
      AggregateRow agg;
      for (int t = 0; t < g.trials; ++t) {
        const ResultRow& r = rows[c * per_cell + static_cast<std::size_t>(t) * n_alg + a];
        agg.M = r.M;
        agg.N = r.N;
        agg.T = r.T;
        agg.snr_db = r.snr_db;
        agg.algorithm = r.algorithm;
        agg.lambda_or_tau = r.lambda_or_tau;
        ++agg.trials;
        if (std::isnan(r.mse)) {
          ++agg.failures;
          continue;
        }
        mses.push_back(r.mse);
        sads.push_back(r.sad_mean_deg);
        walls.push_back(r.wall_ms);
      }
      if (!mses.empty()) {
        double sum = 0.0;
        for (double v : mses) sum += v;
        agg.mse_mean = sum / static_cast<double>(mses.size());
        double ss = 0.0;
        for (double v : mses) ss += (v - agg.mse_mean) * (v - agg.mse_mean);
        agg.mse_std = mses.size() > 1 ? std::sqrt(ss / static_cast<double>(mses.size() - 1)) : 0.0;
        agg.mse_median = median(mses);
        double s2 = 0.0;
        for (double v : sads) s2 += v;
        agg.sad_mean_deg = s2 / static_cast<double>(sads.size());
        agg.wall_ms_median = median(walls);
      }
      out.push_back(agg);
    }
  return out;
}

inline constexpr const char* kAggregateHeader =
    "M,N,T,snr_db,algorithm,lambda_or_tau,trials,failures,mse_mean,mse_std,mse_median,sad_mean_deg,wall_ms_median";

inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  os << kAggregateHeader << '\n';
  for (const auto& r : rows)
    os << r.M << ',' << r.N << ',' << r.T << ',' << csv_number(r.snr_db) << ',' << r.algorithm << ','
       << csv_number(r.lambda_or_tau) << ',' << r.trials << ',' << r.failures << ',' << csv_number(r.mse_mean) << ','
       << csv_number(r.mse_std) << ',' << csv_number(r.mse_median) << ',' << csv_number(r.sad_mean_deg) << ','
       << csv_number(r.wall_ms_median) << '\n';
}

}  // namespace sca
