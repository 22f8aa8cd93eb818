#pragma once

#include <sca/core.hpp>

#include <json.hpp>

#include <chrono>
#include <string>
#include <vector>

namespace sca {

/// Why a solver stopped.
namespace termination {
inline constexpr const char* max_iter = "max_iter";
inline constexpr const char* rel_change = "rel_change";
inline constexpr const char* stationary = "stationary";
inline constexpr const char* line_search_stall = "line_search_stall";
inline constexpr const char* budget = "budget";
inline constexpr const char* init_only = "init_only";
}  // namespace termination

/// One fixed-penalty stage of the probabilistic solver.
struct PrStageTrace {
  double eta = 0.0;
  long sweeps = 0;
  std::vector<double> objective;  // F_eta after each sweep (entry 0: stage start)
  long w_recomputes = 0;
  long d_iterations = 0;
  long c_pg_iterations = 0;
  long c_stalls = 0;
  bool budget_hit = false;
};

struct RunReport {
  std::string algorithm;
  nlohmann::json config = nlohmann::json::object();
  std::vector<double> objective;        // entry 0 is the starting point
  std::vector<double> theta;            // accepted step sizes (line-search methods)
  std::vector<double> model_decrease;   // h at each accepted step
  std::vector<double> mu;               // accepted curvature per iteration (backtracking methods)
  std::vector<double> alpha;            // extrapolation weight per iteration
  std::vector<int> admm_iterations;
  std::vector<PrStageTrace> stages;
  std::vector<Matrix> iterates;         // only filled on request
  long iterations = 0;
  long restarts = 0;
  std::string termination;
  double wall_ms = 0.0;
  nlohmann::json extra = nlohmann::json::object();

  double final_objective() const { return objective.empty() ? kInf : objective.back(); }
};

inline nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["algorithm"] = r.algorithm;
  j["config"] = r.config;
  nlohmann::json obj = nlohmann::json::array();
  for (double v : r.objective) obj.push_back(finite_or_null(v));
  j["objective_trace"] = obj;
  j["theta_trace"] = r.theta;
  if (!r.model_decrease.empty()) j["model_decrease_trace"] = r.model_decrease;
  if (!r.mu.empty()) j["mu_trace"] = r.mu;
  if (!r.alpha.empty()) j["alpha_trace"] = r.alpha;
  if (!r.admm_iterations.empty()) j["admm_iterations"] = r.admm_iterations;
  if (!r.stages.empty()) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : r.stages) {
      nlohmann::json f = nlohmann::json::array();
      for (double v : s.objective) f.push_back(finite_or_null(v));
      stages.push_back({{"eta", s.eta},
                        {"sweeps", s.sweeps},
                        {"F_eta_trace", f},
                        {"w_recomputes", s.w_recomputes},
                        {"d_iterations", s.d_iterations},
                        {"c_pg_iterations", s.c_pg_iterations},
                        {"c_stalls", s.c_stalls},
                        {"budget_hit", s.budget_hit}});
    }
    j["stages"] = stages;
  }
  j["iterations"] = r.iterations;
  j["restarts"] = r.restarts;
  j["termination"] = r.termination;
  j["wall_ms"] = r.wall_ms;
  if (!r.extra.empty()) j["extra"] = r.extra;
  return j;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace sca
