#pragma once
// Replication experiments: weighted sup-RMSE against exact references, bias,
// exact sampler-call accounting, and report emission.
//
// Determinism contract: replication j draws from root_stream(master_seed ^ j)
// and every per-replication result is stored, then reduced in replication
// order after all workers finish. Output is therefore bit-identical across
// thread counts and runs. wall_ms is the one non-deterministic column;
// record_timing=false pins it to 0 for byte-stable reports.

#include <cstdint>
#include <string>
#include <vector>

#include "mlfp/model.hpp"
#include "mlfp/util.hpp"

namespace mlfp {

struct ExperimentConfig {
  std::uint64_t m = 4;
  std::uint64_t n_max = 1;
  std::uint64_t reps = 2;          // >= 2 so standard errors exist
  std::uint64_t master_seed = 0;
  unsigned threads = 1;            // 0 = hardware concurrency
  bool record_timing = true;
  double oracle_tol = 1e-13;
  // Depth used for the self-reference on models without an exact oracle.
  std::uint64_t self_reference_extra = 2;
};

struct ReportRow {
  std::string model;
  std::uint64_t m = 0;
  std::uint64_t n = 0;
  std::uint64_t reps = 0;
  double weighted_sup_rmse = 0.0;
  double bound = 0.0;          // gamma * alpha^n from certificates; nan if no oracle
  double mean_abs_bias = 0.0;  // vs exact fixed point (Picard_1 at n=1); nan if no oracle
  u128 sampler_calls = 0;      // exact ledger count of ONE estimator call
  double wall_ms = 0.0;
  std::string stream_version;
};

// One row per n in {1..n_max}. Finite models are scored against exact_q
// (bias at n=1 against picard_iterate(1), where the estimator mean is exact).
std::vector<ReportRow> run_experiment(const FiniteModel& model,
                                      const std::vector<int>& test_states,
                                      const ExperimentConfig& cfg);

// Continuous-state control models have no exact oracle: rows are scored
// against the replication average of a depth-(n_max + extra) run on an
// offset seed, the model id gains a "|reference=self" marker, and the
// bound/bias columns are nan (bound checks skip such rows).
std::vector<ReportRow> run_experiment(const GaussControl& model,
                                      const std::vector<std::vector<double>>& test_states,
                                      const ExperimentConfig& cfg);

// Exact header, 17-significant-digit floats, sampler_calls in full decimal.
// Model ids must not contain commas (enforced).
inline constexpr const char* kCsvHeader =
    "model,M,n,reps,weighted_sup_rmse,bound,mean_abs_bias,sampler_calls,wall_ms,stream_version";

std::string emit_csv(const std::vector<ReportRow>& rows);
std::string emit_json(const std::vector<ReportRow>& rows);  // nan -> null
std::vector<ReportRow> parse_csv(const std::string& text);

std::string format_double_17g(double v);

struct BoundCheck {
  bool ok = true;
  std::vector<std::string> verdicts;  // one line per row
};

// Row-by-row: bound column must equal gamma*alpha^n (recomputed), rmse must
// not exceed slack*bound, and sampler_calls must equal the exact ledger
// prediction theory::samples_per_estimate(n, M, actions). Rows without a
// finite bound (self-referenced) get rmse/bound checks skipped but still
// have their ledger verified.
BoundCheck check_bounds(const std::vector<ReportRow>& rows, double gamma_value,
                        double alpha_value, std::size_t actions, double slack);

}  // namespace mlfp
