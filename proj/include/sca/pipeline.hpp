#pragma once

// End-to-end unmixing of an M x T data matrix: optional NMF-style column
// normalization, PCA to N, noise-floor variance, anchor vector, expanded
// vertex start, one solver, and lifting back to M dimensions.

#include <sca/core.hpp>
#include <sca/h2sisal.hpp>
#include <sca/preprocessing.hpp>
#include <sca/prsisal.hpp>
#include <sca/report.hpp>
#include <sca/rng.hpp>
#include <sca/sisal.hpp>
#include <sca/synthetic.hpp>
#include <sca/vertex_init.hpp>

#include <cmath>
#include <optional>
#include <string>

namespace sca {

enum class Algorithm { sisal, h2sisal, prsisal, prsisal_pg, prsisal_epg, init };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::sisal: return "sisal";
    case Algorithm::h2sisal: return "h2-sisal";
    case Algorithm::prsisal: return "pr-sisal";
    case Algorithm::prsisal_pg: return "pr-sisal-pg";
    case Algorithm::prsisal_epg: return "pr-sisal-epg";
    case Algorithm::init: return "init";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::sisal, Algorithm::h2sisal, Algorithm::prsisal, Algorithm::prsisal_pg,
                      Algorithm::prsisal_epg, Algorithm::init})
    if (name == to_string(a)) return a;
  return std::nullopt;
}

inline bool is_probabilistic(Algorithm a) {
  return a == Algorithm::prsisal || a == Algorithm::prsisal_pg || a == Algorithm::prsisal_epg;
}

struct UnmixOptions {
  Algorithm algorithm = Algorithm::sisal;
  Index n = 0;
  bool normalize = false;
  std::optional<double> sigma;               // noise std; estimated when absent and M > N
  std::optional<AnchorMethod> anchor;        // default: second-order for the probabilistic solvers, else pinv
  double expansion = kDefaultExpansion;
  std::uint64_t init_seed = 0;
  SisalConfig sisal;
  H2Config h2;
  PrConfig pr;
  PrDirectConfig pr_direct;
};

struct UnmixResult {
  Matrix A_hat;      // M x N
  Matrix A_reduced;  // N x N
  Matrix B;
  RunReport report;
  DrModel dr;
  AnchorEstimate anchor;
  InitResult init;
  double sigma2 = 0.0;
  bool sigma2_estimated = false;
};

/// Stream id of the initializer's tie-breaking RNG.
inline constexpr std::uint64_t kInitStream = 7;

inline UnmixResult unmix(const Matrix& y_in, const UnmixOptions& opt) {
  detail::require(opt.n >= 2 && opt.n <= y_in.rows(), "unmix: model order must satisfy 2 <= N <= M");
  const Matrix y = opt.normalize ? nmf_normalize(y_in) : y_in;
  UnmixResult out;
  out.dr = fit_pca(y, opt.n);
  const Matrix yr = out.dr.reduce(y);

  if (opt.sigma) {
    detail::require(*opt.sigma >= 0.0, "unmix: sigma must be non-negative");
    out.sigma2 = *opt.sigma * *opt.sigma;
  } else if (y.rows() > opt.n) {
    out.sigma2 = estimate_sigma2(y, opt.n);
    out.sigma2_estimated = true;
  } else if (is_probabilistic(opt.algorithm)) {
    throw std::invalid_argument("unmix: M = N leaves no noise eigenvalue; sigma must be given for " +
                                std::string(to_string(opt.algorithm)));
  }
  const AnchorMethod method = opt.anchor.value_or(is_probabilistic(opt.algorithm) && out.sigma2 > 0.0
                                                      ? AnchorMethod::second_order
                                                      : AnchorMethod::pinv);
  out.anchor = estimate_anchor(yr, out.sigma2, method);

  Rng rng(opt.init_seed, kInitStream);
  const Stopwatch init_clock;
  out.init = expanded_vertex_init(yr, opt.n, opt.expansion, rng);
  const double init_ms = init_clock.elapsed_ms();
  const Matrix& b0 = out.init.B_init;

  switch (opt.algorithm) {
    case Algorithm::sisal: {
      SisalResult r = sisal_solve(yr, out.anchor.p, b0, opt.sisal);
      out.B = std::move(r.state.B);
      out.report = std::move(r.report);
      break;
    }
    case Algorithm::h2sisal: {
      H2Result r = h2_solve(yr, out.anchor.p, b0, opt.h2);
      out.B = std::move(r.B);
      out.report = std::move(r.report);
      break;
    }
    case Algorithm::prsisal:
    case Algorithm::prsisal_pg:
    case Algorithm::prsisal_epg: {
      const double sigma = std::sqrt(out.sigma2);
      if (!(sigma > 0.0)) throw std::invalid_argument("unmix: probabilistic solvers need sigma > 0");
      PrResult r;
      if (opt.algorithm == Algorithm::prsisal) {
        r = pr_solve(yr, sigma, out.anchor.p, b0, opt.pr);
      } else {
        PrDirectConfig cfg = opt.pr_direct;
        cfg.pg.extrapolate = opt.algorithm == Algorithm::prsisal_epg;
        r = pr_direct_solve(yr, sigma, out.anchor.p, b0, cfg);
      }
      out.B = std::move(r.B);
      out.report = std::move(r.report);
      break;
    }
    case Algorithm::init: {
      out.B = b0;
      out.report.algorithm = "init";
      out.report.termination = termination::init_only;
      out.report.wall_ms = init_ms;
      break;
    }
  }

  if (opt.algorithm == Algorithm::init) {
    out.A_reduced = out.init.A_init;
  } else {
    const LuFactor lu(out.B);
    if (lu.singular()) throw NumericalError("unmix: solver returned a singular B");
    out.A_reduced = lu.inverse();
  }
  out.A_hat = lift_estimate(out.dr, out.A_reduced);

  auto& ex = out.report.extra;
  ex["normalized"] = opt.normalize;
  ex["pca_centered"] = out.dr.mean_used;
  ex["sigma2"] = out.sigma2;
  ex["sigma2_estimated"] = out.sigma2_estimated;
  ex["anchor_method"] = to_string(out.anchor.method);
  ex["expansion"] = opt.expansion;
  ex["init_indices"] = out.init.selected_indices;
  return out;
}

}  // namespace sca
