#include "mlfp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mlfp/estimator.hpp"
#include "mlfp/oracle.hpp"
#include "mlfp/theory.hpp"

namespace mlfp {

namespace {

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs reps replications of a depth-n estimate at every test state, storing
// every per-replication Q-value. Worker threads own disjoint replication
// ranges and disjoint result slots, so no synchronization is needed and the
// stored numbers are independent of the schedule. Returns the exact ledger
// count of a single estimator call via per_call.
template <ControlModel M>
std::vector<double> replicate(const M& model,
                              const std::vector<typename M::State>& states,
                              std::uint64_t m, std::uint64_t n, std::uint64_t reps,
                              std::uint64_t master_seed, unsigned threads,
                              u128& per_call) {
  const std::size_t n_actions = model.action_count();
  const std::size_t n_states = states.size();
  std::vector<double> results(reps * n_states * n_actions);

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), reps));
  std::vector<CostLedger> ledgers(n_threads);

  auto work = [&](unsigned t, std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t j = lo; j < hi; ++j) {
      StreamHandle root = root_stream(master_seed ^ j);
      for (std::size_t s = 0; s < n_states; ++s) {
        const ActionValues q = mlfp_q(model, states[s], m, n, root, &ledgers[t]);
        double* slot = results.data() + (j * n_states + s) * n_actions;
        for (std::size_t a = 0; a < n_actions; ++a) slot[a] = q[a];
      }
    }
  };

  if (n_threads <= 1) {
    work(0, 0, reps);
  } else {
    const std::uint64_t chunk = (reps + n_threads - 1) / n_threads;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
      const std::uint64_t lo = std::min<std::uint64_t>(t * chunk, reps);
      const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, reps);
      pool.emplace_back(work, t, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  u128 total = 0;
  for (const auto& led : ledgers) total = checked_add_u128(total, led.count());
  const u128 calls = static_cast<u128>(reps) * n_states;
  if (calls == 0 || total % calls != 0)
    throw std::logic_error("harness: per-call ledger counts are inconsistent");
  per_call = total / calls;
  return results;
}

double weighted_sup_rmse_from(const std::vector<double>& results,
                              const std::vector<double>& reference,
                              const std::vector<double>& weights,
                              std::uint64_t reps, std::size_t n_states,
                              std::size_t n_actions) {
  double sup = 0.0;
  for (std::size_t s = 0; s < n_states; ++s) {
    double mean_sq = 0.0;
    for (std::uint64_t j = 0; j < reps; ++j) {
      const double* slot = results.data() + (j * n_states + s) * n_actions;
      double err = 0.0;
      for (std::size_t a = 0; a < n_actions; ++a)
        err = std::max(err, std::fabs(slot[a] - reference[s * n_actions + a]));
      mean_sq += err * err;
    }
    mean_sq /= static_cast<double>(reps);
    sup = std::max(sup, std::sqrt(mean_sq) / weights[s]);
  }
  return sup;
}

double mean_abs_bias_from(const std::vector<double>& results,
                          const std::vector<double>& reference,
                          std::uint64_t reps, std::size_t n_states,
                          std::size_t n_actions) {
  double acc = 0.0;
  for (std::size_t s = 0; s < n_states; ++s) {
    for (std::size_t a = 0; a < n_actions; ++a) {
      double mean = 0.0;
      for (std::uint64_t j = 0; j < reps; ++j)
        mean += results[(j * n_states + s) * n_actions + a];
      mean /= static_cast<double>(reps);
      acc += std::fabs(mean - reference[s * n_actions + a]);
    }
  }
  return acc / static_cast<double>(n_states * n_actions);
}

void validate_config(const ExperimentConfig& cfg, std::size_t n_states) {
  if (cfg.reps < 2) throw std::invalid_argument("experiment: reps must be >= 2");
  if (n_states == 0) throw std::invalid_argument("experiment: test states must be nonempty");
  if (cfg.m < 1) throw std::invalid_argument("experiment: M must be >= 1");
  if (cfg.n_max < 1) throw std::invalid_argument("experiment: n_max must be >= 1");
}

}  // namespace

std::vector<ReportRow> run_experiment(const FiniteModel& model,
                                      const std::vector<int>& test_states,
                                      const ExperimentConfig& cfg) {
  validate_config(cfg, test_states.size());
  for (int x : test_states)
    if (x < 0 || static_cast<std::size_t>(x) >= model.n_states)
      throw std::invalid_argument("experiment: test state out of range");

  const std::size_t n_actions = model.n_actions;
  const std::size_t n_states = test_states.size();

  const QTable exact = exact_q(model, cfg.oracle_tol);
  const QTable picard1 = picard_iterate(model, 1);
  auto gather = [&](const QTable& t) {
    std::vector<double> ref(n_states * n_actions);
    for (std::size_t s = 0; s < n_states; ++s)
      for (std::size_t a = 0; a < n_actions; ++a)
        ref[s * n_actions + a] = t.at(test_states[s], static_cast<ActionId>(a));
    return ref;
  };
  const std::vector<double> exact_ref = gather(exact);
  const std::vector<double> picard1_ref = gather(picard1);
  std::vector<double> weights(n_states);
  for (std::size_t s = 0; s < n_states; ++s) weights[s] = model.weight(test_states[s]);

  const double cw_l = model.certificate().lambda * model.discount();
  const double a_val = theory::alpha(cw_l, n_actions, cfg.m);
  const double g_val = theory::gamma(model.certificate().kappa, cw_l, n_actions);

  std::vector<ReportRow> rows;
  rows.reserve(cfg.n_max);
  for (std::uint64_t n = 1; n <= cfg.n_max; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    u128 per_call = 0;
    const std::vector<double> results = replicate(model, test_states, cfg.m, n,
                                                  cfg.reps, cfg.master_seed,
                                                  cfg.threads, per_call);
    const auto t1 = std::chrono::steady_clock::now();

    ReportRow row;
    row.model = model.name;
    row.m = cfg.m;
    row.n = n;
    row.reps = cfg.reps;
    row.weighted_sup_rmse = weighted_sup_rmse_from(results, exact_ref, weights,
                                                   cfg.reps, n_states, n_actions);
    row.bound = g_val * std::pow(a_val, static_cast<double>(n));
    row.mean_abs_bias = mean_abs_bias_from(
        results, n == 1 ? picard1_ref : exact_ref, cfg.reps, n_states, n_actions);
    row.sampler_calls = per_call;
    row.wall_ms = cfg.record_timing
                      ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                      : 0.0;
    row.stream_version = kStreamVersion;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ReportRow> run_experiment(const GaussControl& model,
                                      const std::vector<std::vector<double>>& test_states,
                                      const ExperimentConfig& cfg) {
  validate_config(cfg, test_states.size());
  for (const auto& x : test_states)
    if (x.size() != model.dim)
      throw std::invalid_argument("experiment: test state dimension mismatch");

  const std::size_t n_actions = model.action_count();
  const std::size_t n_states = test_states.size();

  // Self-reference: replication average of a deeper run on an offset seed,
  // independent of every stream the scored runs use.
  constexpr std::uint64_t kReferenceSeedOffset = 0x9e3779b97f4a7c15ULL;
  const std::uint64_t n_ref = cfg.n_max + cfg.self_reference_extra;
  u128 ref_calls = 0;
  const std::vector<double> ref_results =
      replicate(model, test_states, cfg.m, n_ref, cfg.reps,
                cfg.master_seed + kReferenceSeedOffset, cfg.threads, ref_calls);
  std::vector<double> reference(n_states * n_actions, 0.0);
  for (std::uint64_t j = 0; j < cfg.reps; ++j)
    for (std::size_t k = 0; k < reference.size(); ++k)
      reference[k] += ref_results[j * reference.size() + k];
  for (double& v : reference) v /= static_cast<double>(cfg.reps);

  std::vector<double> weights(n_states);
  for (std::size_t s = 0; s < n_states; ++s) weights[s] = model.weight(test_states[s]);

  std::ostringstream id;
  id << "gauss_control(d=" << model.dim << ")|reference=self";

  std::vector<ReportRow> rows;
  rows.reserve(cfg.n_max);
  for (std::uint64_t n = 1; n <= cfg.n_max; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    u128 per_call = 0;
    const std::vector<double> results = replicate(model, test_states, cfg.m, n,
                                                  cfg.reps, cfg.master_seed,
                                                  cfg.threads, per_call);
    const auto t1 = std::chrono::steady_clock::now();

    ReportRow row;
    row.model = id.str();
    row.m = cfg.m;
    row.n = n;
    row.reps = cfg.reps;
    row.weighted_sup_rmse = weighted_sup_rmse_from(results, reference, weights,
                                                   cfg.reps, n_states, n_actions);
    row.bound = std::numeric_limits<double>::quiet_NaN();
    row.mean_abs_bias = std::numeric_limits<double>::quiet_NaN();
    row.sampler_calls = per_call;
    row.wall_ms = cfg.record_timing
                      ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                      : 0.0;
    row.stream_version = kStreamVersion;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Serialization.

std::string format_double_17g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string emit_csv(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("emit_csv: no rows");
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const ReportRow& r : rows) {
    if (r.model.find(',') != std::string::npos)
      throw std::invalid_argument("emit_csv: model id must not contain commas");
    out << r.model << ',' << r.m << ',' << r.n << ',' << r.reps << ','
        << format_double_17g(r.weighted_sup_rmse) << ','
        << format_double_17g(r.bound) << ','
        << format_double_17g(r.mean_abs_bias) << ',' << to_decimal(r.sampler_calls)
        << ',' << format_double_17g(r.wall_ms) << ',' << r.stream_version << '\n';
  }
  return out.str();
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

// JSON has no NaN/Inf literals; such values become null.
std::string json_number(double v) {
  if (!std::isfinite(v)) return "null";
  return format_double_17g(v);
}

}  // namespace

std::string emit_json(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("emit_json: no rows");
  std::ostringstream out;
  out << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ReportRow& r = rows[i];
    // Keys in lexicographic order. sampler_calls is a decimal string: the
    // exact counts exceed what a JSON double can hold.
    out << "  {\"M\": " << r.m << ", \"bound\": " << json_number(r.bound)
        << ", \"mean_abs_bias\": " << json_number(r.mean_abs_bias)
        << ", \"model\": \"" << json_escape(r.model) << "\", \"n\": " << r.n
        << ", \"reps\": " << r.reps << ", \"sampler_calls\": \""
        << to_decimal(r.sampler_calls) << "\", \"stream_version\": \""
        << json_escape(r.stream_version) << "\", \"wall_ms\": "
        << json_number(r.wall_ms) << ", \"weighted_sup_rmse\": "
        << json_number(r.weighted_sup_rmse) << "}";
    out << (i + 1 < rows.size() ? ",\n" : "\n");
  }
  out << "]\n";
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double_field(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw std::invalid_argument(std::string("parse_csv: bad ") + what + ": " + s);
  return v;
}

std::uint64_t parse_u64_field(const std::string& s, const char* what) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw std::invalid_argument(std::string("parse_csv: bad ") + what + ": " + s);
  return v;
}

}  // namespace

std::vector<ReportRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw std::invalid_argument("parse_csv: missing or unexpected header line");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10)
      throw std::invalid_argument("parse_csv: expected 10 fields, got " +
                                  std::to_string(f.size()));
    ReportRow r;
    r.model = f[0];
    r.m = parse_u64_field(f[1], "M");
    r.n = parse_u64_field(f[2], "n");
    r.reps = parse_u64_field(f[3], "reps");
    r.weighted_sup_rmse = parse_double_field(f[4], "weighted_sup_rmse");
    r.bound = parse_double_field(f[5], "bound");
    r.mean_abs_bias = parse_double_field(f[6], "mean_abs_bias");
    r.sampler_calls = parse_u128(f[7]);
    r.wall_ms = parse_double_field(f[8], "wall_ms");
    r.stream_version = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

BoundCheck check_bounds(const std::vector<ReportRow>& rows, double gamma_value,
                        double alpha_value, std::size_t actions, double slack) {
  BoundCheck out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ReportRow& r = rows[i];
    std::ostringstream line;
    line << "row " << i << " (model=" << r.model << ", n=" << r.n << "): ";
    std::string why;

    const u128 predicted = theory::samples_per_estimate(r.n, r.m, actions);
    if (r.sampler_calls != predicted)
      why += "sampler_calls " + to_decimal(r.sampler_calls) +
             " != ledger prediction " + to_decimal(predicted) + "; ";

    if (std::isfinite(r.bound)) {
      const double recomputed =
          gamma_value * std::pow(alpha_value, static_cast<double>(r.n));
      if (std::fabs(r.bound - recomputed) >
          1e-9 * std::max(1.0, std::fabs(recomputed)))
        why += "bound column " + format_double_17g(r.bound) +
               " != gamma*alpha^n = " + format_double_17g(recomputed) + "; ";
      if (!(r.weighted_sup_rmse <= slack * recomputed))
        why += "rmse " + format_double_17g(r.weighted_sup_rmse) + " exceeds " +
               format_double_17g(slack) + " * bound " +
               format_double_17g(recomputed) + "; ";
    } else {
      line << "(no oracle: rmse bound skipped) ";
    }

    if (why.empty()) {
      line << "PASS";
    } else {
      line << "FAIL: " << why;
      out.ok = false;
    }
    out.verdicts.push_back(line.str());
  }
  return out;
}

}  // namespace mlfp
