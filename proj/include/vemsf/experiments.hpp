#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vemsf/system.hpp"

namespace vemsf {

inline constexpr const char* kVersion = "0.1.0";

// Method labels: SFNCVEM / SFCVEM (projected-gradient forms) and
// NCVEM / CVEM (dofi-dofi stabilized baselines).
struct MethodId {
  Family family = Family::NC;
  MethodKind kind = MethodKind::SF;
};

MethodId parse_method(const std::string& name);  // throws on unknown label
std::string method_name(const MethodId& id);

struct ExperimentConfig {
  // convergence | local-spectrum | collapsing-hexagons | patch-test | timing
  std::string experiment;
  std::vector<std::string> methods;  // empty: all four
  std::vector<int> ks;               // empty: experiment default
  // generator family, a mesh JSON path, or empty for the experiment default
  std::string mesh;
  int levels = 0;  // 0: experiment default
  std::optional<double> alpha;
  std::string out_dir;  // used by the CLI; run_experiment itself writes nothing
  int threads = 1;
  int quad_exactness = -1;  // < 0: 2k + 4
  // Relative cutoff for classifying stiffness eigenvalues as kernel.
  // Default: 1e-8, except collapsing-hexagons which uses 1e-13 — there the
  // kernel (the constants) sits at relative ~1e-16 while the smallest physical
  // eigenvalue stays above ~1e-11 of lam_max, so the tighter cut keeps the
  // reported cond tracking the physical spectrum instead of saturating.
  std::optional<double> zero_threshold;
  std::int64_t dof_cap = 2'000'000;
  unsigned seed = 42;
  // progress hook, called after each completed run (CLI printing)
  std::function<void(const struct RunRecord&)> on_record;
};

struct RunRecord {
  std::string method;
  std::string mesh;  // human label, JSON mirror only (CSV columns are fixed)
  int k = 0;
  double h = 0.0;
  int dofs = 0;
  int index = -1;            // refinement level / collapse index / case id
  int quad_exactness = 0;    // resolved value actually used
  std::optional<double> err_l2, err_grad;
  std::optional<double> order_l2, order_grad;  // vs the previous level
  std::optional<double> lam_max, lam_min_nz, cond;
  std::optional<int> n_zero;
  std::optional<double> seconds;
  std::optional<double> ratio;  // timing: seconds / fastest in the same group
};

struct OrderFit {
  std::string method;
  std::string mesh;
  int k = 0;
  double fit_l2 = 0.0;  // least-squares slope of log e vs log h
  double fit_grad = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  int quad_exactness = -1;  // -1: per-run default 2k + 4 (see record values)
  double zero_threshold = 1e-8;
  int threads = 1;
  double alpha = 0.0;
  std::string basis;  // cell/interior-DoF basis used
  std::string version = kVersion;
  bool timing_in_csv = false;  // only the timing experiment fills `seconds`
  std::vector<RunRecord> records;
  std::vector<OrderFit> fits;
};

// Runs the configured experiment and returns the report. Throws
// std::invalid_argument on bad configs and std::runtime_error when the
// estimated problem size exceeds config.dof_cap (refusal with the estimate).
ExperimentReport run_experiment(const ExperimentConfig& config);

// Fixed column order:
// method,k,h,dofs,err_l2,err_grad,order_l2,order_grad,lam_max,lam_min_nz,
// n_zero,cond,seconds — absent fields empty, shortest round-trip numbers.
std::string csv_string(const ExperimentReport& report);
void write_csv(const ExperimentReport& report, const std::string& path);

// JSON mirror: full environment stamp + every record field; numeric values
// survive a reload bit-exactly.
std::string json_string(const ExperimentReport& report);
void write_json(const ExperimentReport& report, const std::string& path);
ExperimentReport report_from_json(const std::string& text);

// Writes <out_dir>/<experiment>.csv and .json (directory created); returns
// the paths written. Throws std::runtime_error on unwritable paths.
std::vector<std::string> write_report(const ExperimentReport& report,
                                      const std::string& out_dir);

}  // namespace vemsf
