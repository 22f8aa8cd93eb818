// simplex_unmix: synthetic data generation, single unmixing runs and
// Monte Carlo sweeps. Exit status 0 on success, 1 on runtime failure,
// 2 on usage errors.

#include <sca/sca.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthArgs {
  int m = 10, n = 5, t = 1000;
  std::optional<double> snr_db;
  bool noiseless = false;
  std::uint64_t seed = 0;
  double cond_max = 100.0;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  sca::SynthSpec spec;
  spec.M = a.m;
  spec.N = a.n;
  spec.T = a.t;
  spec.noiseless = a.noiseless;
  spec.snr_db = a.snr_db.value_or(30.0);
  spec.seed = a.seed;
  spec.cond_max = a.cond_max;
  try {
    sca::validate(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const sca::Dataset data = sca::generate(spec);
  sca::save_dataset(a.out, data);
  const double snr = sca::empirical_snr_db(data);
  std::cout << "wrote " << (fs::path(a.out) / "data.csv").string() << " and " << (fs::path(a.out) / "truth.json").string()
            << "\nempirical SNR: " << sca::format_double(snr) << " dB\n";
  return 0;
}

struct UnmixArgs {
  std::string data, truth, out;
  std::string alg;
  int n = 0;
  std::optional<double> lambda, tau, sigma;
  bool normalize = false;
  std::string anchor = "auto";
  double expansion = sca::kDefaultExpansion;
  std::optional<std::uint64_t> seed;
  std::string line_search = "armijo";
  std::optional<long> max_iter;
  std::optional<long> inner_max;
};

int cmd_unmix(const UnmixArgs& a) {
  const sca::Dataset data = sca::load_dataset(a.data, a.truth);
  sca::UnmixOptions opt;
  opt.algorithm = *sca::parse_algorithm(a.alg);
  opt.n = a.n > 0 ? a.n : (data.truth ? data.truth->A0.cols() : 0);
  if (opt.n < 2) throw UsageError("--n is required when the data has no ground truth");
  if (opt.n > data.Y.rows()) throw UsageError("--n exceeds the data dimension");
  if (sca::is_probabilistic(opt.algorithm) && data.Y.rows() == opt.n && !a.sigma)
    throw UsageError("M = N: the noise level cannot be estimated; pass --sigma for " + a.alg);
  opt.sigma = a.sigma;
  opt.normalize = a.normalize;
  if (a.anchor == "pinv") opt.anchor = sca::AnchorMethod::pinv;
  if (a.anchor == "second-order") opt.anchor = sca::AnchorMethod::second_order;
  opt.expansion = a.expansion;
  opt.init_seed = a.seed.value_or(data.seed);

  if (a.lambda) opt.sisal.lambda = opt.h2.lambda = *a.lambda;
  if (a.tau) opt.pr.tau = opt.pr_direct.tau = *a.tau;
  opt.sisal.line_search = a.line_search == "legacy" ? sca::LineSearch::legacy : sca::LineSearch::armijo;
  if (a.max_iter) {
    opt.sisal.max_outer = static_cast<int>(*a.max_iter);
    opt.h2.pg.max_iter = opt.pr_direct.pg.max_iter = *a.max_iter;
  }
  if (a.inner_max) opt.pr.inner_max = *a.inner_max;
  try {
    sca::validate(opt.sisal);
    sca::validate(opt.h2.pg);
    sca::validate(opt.pr);
    if (opt.h2.lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const sca::UnmixResult r = sca::unmix(data.Y, opt);
  fs::create_directories(a.out);
  sca::write_matrix_csv(fs::path(a.out) / "A_hat.csv", r.A_hat);
  sca::write_json(fs::path(a.out) / "report.json", sca::to_json(r.report));
  std::cout << a.alg << ": " << r.report.termination << ", " << r.report.iterations << " iterations, "
            << sca::format_double(r.report.wall_ms) << " ms\n";
  if (data.truth) {
    std::cout << "MSE: " << sca::format_double(sca::mse(data.truth->A0, r.A_hat).score) << "\n"
              << "mean SAD: " << sca::format_double(sca::radians_to_degrees(sca::sad(data.truth->A0, r.A_hat).score))
              << " deg\n";
  }
  return 0;
}

struct BenchArgs {
  std::string grid, out, aggregate, svg;
  int parallel = 0;
};

int cmd_bench(const BenchArgs& a) {
  sca::BenchGrid grid;
  try {
    grid = sca::parse_grid(sca::read_json(a.grid));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("grid: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const int threads = sca::resolve_threads(a.parallel);
  const std::vector<sca::ResultRow> rows = sca::run_bench(grid, threads);
  const std::vector<sca::AggregateRow> agg = sca::aggregate(grid, rows);

  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  {
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out.string());
    sca::write_results_csv(os, rows);
  }
  fs::path agg_path = a.aggregate.empty() ? out.parent_path() / (out.stem().string() + "_aggregate.csv") : fs::path(a.aggregate);
  {
    std::ofstream os(agg_path);
    if (!os) throw std::runtime_error("cannot write " + agg_path.string());
    sca::write_aggregate_csv(os, agg);
  }
  std::cout << rows.size() << " rows -> " << out.string() << "\naggregate -> " << agg_path.string() << "\n";
  if (!a.svg.empty()) {
    fs::create_directories(a.svg);
    for (const auto& [key, svg] : sca::mse_charts(agg)) {
      const fs::path p = fs::path(a.svg) / ("mse_" + key + ".svg");
      std::ofstream os(p);
      if (!os) throw std::runtime_error("cannot write " + p.string());
      os << svg;
      std::cout << "chart -> " << p.string() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simplex component analysis: SISAL, H2-SISAL and Pr-SISAL"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--m", sa.m, "data dimension M")->check(CLI::PositiveNumber);
  synth->add_option("--n", sa.n, "number of endmembers N")->check(CLI::PositiveNumber);
  synth->add_option("--t", sa.t, "number of samples T")->check(CLI::PositiveNumber);
  auto* snr_opt = synth->add_option("--snr-db", sa.snr_db, "signal-to-noise ratio in dB (default 30)");
  synth->add_flag("--noiseless", sa.noiseless, "no additive noise")->excludes(snr_opt);
  synth->add_option("--seed", sa.seed, "generator seed");
  synth->add_option("--cond-max", sa.cond_max, "largest admitted condition number of A0");
  synth->add_option("--out", sa.out, "output directory")->required();

  UnmixArgs ua;
  const std::vector<std::string> algs{"sisal", "h2-sisal", "pr-sisal", "pr-sisal-pg", "pr-sisal-epg", "init"};
  auto* un = app.add_subcommand("unmix", "estimate the mixing matrix of one dataset");
  un->add_option("--data", ua.data, "data CSV (M rows, T columns)")->required()->check(CLI::ExistingFile);
  un->add_option("--truth", ua.truth, "ground-truth JSON (default: truth.json next to the data)");
  un->add_option("--alg", ua.alg, "algorithm")->required()->check(CLI::IsMember(algs));
  un->add_option("--n", ua.n, "model order N (default: from ground truth)");
  un->add_option("--lambda", ua.lambda, "penalty weight for sisal / h2-sisal");
  un->add_option("--tau", ua.tau, "weight of the log-Phi term for the pr-sisal family (default 1)");
  un->add_option("--sigma", ua.sigma, "noise standard deviation (estimated when M > N)");
  un->add_flag("--normalize", ua.normalize, "divide each sample by its entry sum first");
  un->add_option("--anchor", ua.anchor, "anchor estimate")->check(CLI::IsMember({"auto", "pinv", "second-order"}));
  un->add_option("--expansion", ua.expansion, "vertex expansion factor (>= 1)");
  un->add_option("--seed", ua.seed, "initializer seed (default: dataset seed)");
  un->add_option("--line-search", ua.line_search, "sisal line search")->check(CLI::IsMember({"armijo", "legacy"}));
  un->add_option("--max-iter", ua.max_iter, "iteration cap of the chosen solver");
  un->add_option("--inner-max", ua.inner_max, "pr-sisal sweeps per penalty stage");
  un->add_option("--out", ua.out, "output directory for A_hat.csv and report.json")->required();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "run a Monte Carlo grid");
  bench->add_option("grid", ba.grid, "grid JSON")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", ba.out, "per-run CSV")->required();
  bench->add_option("--aggregate", ba.aggregate, "aggregate CSV (default: <out>_aggregate.csv)");
  bench->add_option("--svg", ba.svg, "directory for MSE-vs-SNR charts");
  bench->add_option("--parallel", ba.parallel, "worker threads (0: all cores; SIMPLEX_UNMIX_THREADS caps it)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*un) return cmd_unmix(ua);
    if (*bench) return cmd_bench(ba);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
