// mlfp — command-line front end: theory constants, single estimates,
// replication experiments, report bound-checking.
//
// Exit codes: 0 success, 1 usage/config error, 2 bound-check failure.
// Every subcommand is a pure function of its flags, input files, and the
// stream algorithm version; repeated invocations are byte-identical
// (experiment timing can be pinned with --no-timing).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mlfp/estimator.hpp"
#include "mlfp/harness.hpp"
#include "mlfp/model.hpp"
#include "mlfp/oracle.hpp"
#include "mlfp/theory.hpp"

namespace {

using mlfp::format_double_17g;

// Flat JSON object with lexicographically ordered keys; values are
// preformatted literals (numbers, strings with quotes, booleans).
class JsonObject {
 public:
  void add(const std::string& key, const std::string& literal) {
    entries_.emplace_back(key, literal);
  }
  void add_number(const std::string& key, double v) {
    add(key, std::isfinite(v) ? format_double_17g(v) : "null");
  }
  void add_integer(const std::string& key, std::uint64_t v) {
    add(key, std::to_string(v));
  }
  void add_bool(const std::string& key, bool v) { add(key, v ? "true" : "false"); }
  void add_string(const std::string& key, const std::string& v) {
    add(key, "\"" + v + "\"");
  }

  std::string str() const {
    auto sorted = entries_;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::ostringstream out;
    out << "{\n";
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      out << "  \"" << sorted[i].first << "\": " << sorted[i].second;
      out << (i + 1 < sorted.size() ? ",\n" : "\n");
    }
    out << "}\n";
    return out.str();
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::uint64_t seed_from_env_or(std::uint64_t fallback) {
  const char* env = std::getenv("MLFP_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw std::invalid_argument(std::string("MLFP_SEED is not an integer: ") + env);
  return v;
}

std::vector<double> parse_state_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t pos = csv.find(',', start);
    const std::string tok =
        csv.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw std::invalid_argument("malformed state component: '" + tok + "'");
    out.push_back(v);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty state vector");
  return out;
}

// ---------------------------------------------------------------------------

int cmd_constants(double cw_l, std::size_t actions, std::uint64_t m,
                  std::optional<double> kappa, std::optional<double> eps,
                  std::optional<double> delta, std::uint64_t unit_cost) {
  JsonObject out;
  const std::uint64_t mm = mlfp::theory::min_m(cw_l, actions);  // validates cw_l < 1
  out.add_integer("min_M", mm);
  if (delta) out.add_integer("simple_min_M", mlfp::theory::simple_min_m(*delta, actions));

  const double alpha = mlfp::theory::alpha(cw_l, actions, m);
  out.add_number("alpha", alpha);
  out.add_bool("convergence_condition", m >= mm);

  const bool contracting_levels = alpha > 0.0 && alpha < 1.0;
  double beta = 0.0;
  if (contracting_levels) {
    beta = mlfp::theory::beta(m, alpha);
    out.add_number("beta", beta);
  }

  double gamma = 0.0;
  if (kappa) {
    gamma = mlfp::theory::gamma(*kappa, cw_l, actions);
    out.add_number("gamma", gamma);
    if (contracting_levels)
      out.add_number("c", mlfp::theory::c_constant(m, gamma, beta));
  }

  if (eps) {
    if (!kappa)
      throw std::invalid_argument("--eps needs --kappa (gamma enters n_for_eps)");
    if (!contracting_levels)
      throw std::invalid_argument(
          "--eps requires alpha < 1 (raise M above min_M first)");
    const std::uint64_t n_eps = mlfp::theory::n_for_eps(gamma, alpha, *eps);
    out.add_integer("n_for_eps", n_eps);
    out.add("cost_bound",
            mlfp::to_decimal(mlfp::theory::cost_bound(m, n_eps, unit_cost)));
    out.add_number("complexity_budget",
                   mlfp::theory::complexity_budget(m, gamma, beta, unit_cost, *eps));
  }

  std::cout << out.str();
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_estimate(const std::string& model_path, std::uint64_t m, std::uint64_t n,
                 std::uint64_t seed, const std::string& state_csv) {
  const mlfp::LoadedModel loaded = mlfp::load_model_file(model_path);
  const std::vector<double> state = parse_state_list(state_csv);
  const mlfp::StreamHandle root = mlfp::root_stream(seed);

  mlfp::ActionValues q;
  mlfp::CostLedger ledger;

  if (const auto* fm = std::get_if<mlfp::FiniteModel>(&loaded.model)) {
    if (state.size() != 1 || state[0] != std::floor(state[0]))
      throw std::invalid_argument("finite models take a single integer state index");
    const int x = static_cast<int>(state[0]);
    if (x < 0 || static_cast<std::size_t>(x) >= fm->n_states)
      throw std::invalid_argument("state index out of range");
    q = mlfp::mlfp_q(*fm, x, m, n, root, &ledger);
  } else if (const auto* gm = std::get_if<mlfp::GaussControl>(&loaded.model)) {
    if (state.size() != gm->dim)
      throw std::invalid_argument("state dimension mismatch (model dim " +
                                  std::to_string(gm->dim) + ")");
    q = mlfp::mlfp_q(*gm, state, m, n, root, &ledger);
  } else {
    // Stopping model: report the embedded two-action values
    // (action 0 = stop now, action 1 = continue with the estimated value).
    const auto& sm = std::get<mlfp::StoppingWalk>(loaded.model);
    if (state.size() != sm.dim)
      throw std::invalid_argument("state dimension mismatch (model dim " +
                                  std::to_string(sm.dim) + ")");
    const double cont = mlfp::mlfp_stopping(sm, state, m, n, root, &ledger);
    q = mlfp::ActionValues(2);
    q[0] = sm.stop_payoff(state);
    q[1] = cont;
  }

  JsonObject out;
  out.add_integer("greedy_action", mlfp::greedy_action(q));
  {
    std::ostringstream arr;
    arr << "[";
    for (std::size_t a = 0; a < q.size(); ++a)
      arr << (a ? ", " : "") << format_double_17g(q[a]);
    arr << "]";
    out.add("q", arr.str());
  }
  out.add("sampler_calls", "\"" + ledger.decimal() + "\"");
  out.add_number("value", mlfp::value_from_q(q));
  std::cout << out.str();
  return 0;
}

// ---------------------------------------------------------------------------

std::vector<int> finite_states_from_json(const nlohmann::json& arr,
                                         const mlfp::FiniteModel& m) {
  std::vector<int> out;
  for (const auto& v : arr) {
    if (!v.is_number_integer())
      throw std::invalid_argument("test-states for a finite model must be integers");
    const int x = v.get<int>();
    if (x < 0 || static_cast<std::size_t>(x) >= m.n_states)
      throw std::invalid_argument("test state out of range: " + std::to_string(x));
    out.push_back(x);
  }
  return out;
}

std::vector<std::vector<double>> vector_states_from_json(const nlohmann::json& arr,
                                                         std::size_t dim) {
  std::vector<std::vector<double>> out;
  for (const auto& v : arr) {
    if (!v.is_array() || v.size() != dim)
      throw std::invalid_argument("test-states entries must be arrays of length " +
                                  std::to_string(dim));
    out.push_back(v.get<std::vector<double>>());
  }
  return out;
}

int cmd_experiment(const std::string& model_path, const std::string& states_path,
                   const std::string& out_path, const std::string& json_path,
                   std::uint64_t m, std::uint64_t n_max, std::uint64_t reps,
                   std::uint64_t seed, unsigned threads, bool no_timing) {
  const mlfp::LoadedModel loaded = mlfp::load_model_file(model_path);

  nlohmann::json states_json;
  {
    std::ifstream in(states_path);
    if (!in) throw std::invalid_argument("cannot open test-states file " + states_path);
    try {
      in >> states_json;
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(std::string("test-states: invalid JSON: ") + e.what());
    }
    if (!states_json.is_array() || states_json.empty())
      throw std::invalid_argument("test-states must be a nonempty JSON array");
  }

  mlfp::ExperimentConfig cfg;
  cfg.m = m;
  cfg.n_max = n_max;
  cfg.reps = reps;
  cfg.master_seed = seed;
  cfg.threads = threads;
  cfg.record_timing = !no_timing;

  std::vector<mlfp::ReportRow> rows;
  std::size_t n_test_states = 0;
  if (const auto* fm = std::get_if<mlfp::FiniteModel>(&loaded.model)) {
    const auto states = finite_states_from_json(states_json, *fm);
    n_test_states = states.size();
    rows = mlfp::run_experiment(*fm, states, cfg);
  } else if (const auto* gm = std::get_if<mlfp::GaussControl>(&loaded.model)) {
    const auto states = vector_states_from_json(states_json, gm->dim);
    n_test_states = states.size();
    rows = mlfp::run_experiment(*gm, states, cfg);
  } else {
    throw std::invalid_argument(
        "experiment needs a control model (family stopping_walk is estimate-only)");
  }

  // Write outputs; on any failure remove partial files before surfacing.
  auto write_or_cleanup = [&](const std::string& path, const std::string& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << payload) || !out.flush()) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(path, ec);
      throw std::runtime_error("failed writing " + path);
    }
  };
  try {
    write_or_cleanup(out_path, mlfp::emit_csv(rows));
    if (!json_path.empty()) write_or_cleanup(json_path, mlfp::emit_json(rows));
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(out_path, ec);
    if (!json_path.empty()) std::filesystem::remove(json_path, ec);
    throw;
  }

  double max_rmse = 0.0;
  mlfp::u128 total_calls = 0;
  bool ledger_ok = true;
  const std::size_t actions = std::visit(
      [](const auto& mm) -> std::size_t {
        if constexpr (requires { mm.action_count(); }) return mm.action_count();
        else return 2;
      },
      loaded.model);
  for (const auto& r : rows) {
    max_rmse = std::max(max_rmse, r.weighted_sup_rmse);
    total_calls = mlfp::checked_add_u128(
        total_calls, mlfp::checked_mul_u128(
                         r.sampler_calls,
                         static_cast<mlfp::u128>(r.reps) * n_test_states));
    if (r.sampler_calls != mlfp::theory::samples_per_estimate(r.n, r.m, actions))
      ledger_ok = false;
  }
  std::cout << "rows=" << rows.size() << " max_rmse=" << format_double_17g(max_rmse)
            << " total_sampler_calls=" << mlfp::to_decimal(total_calls)
            << " ledger=" << (ledger_ok ? "pass" : "FAIL") << "\n";
  return ledger_ok ? 0 : 2;
}

// ---------------------------------------------------------------------------

int cmd_check(const std::string& report_path, double cw_l, std::size_t actions,
              std::uint64_t m, double kappa, double slack) {
  std::ifstream in(report_path);
  if (!in) throw std::invalid_argument("cannot open report " + report_path);
  std::ostringstream buf;
  buf << in.rdbuf();

  std::vector<mlfp::ReportRow> rows;
  try {
    rows = mlfp::parse_csv(buf.str());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const double alpha = mlfp::theory::alpha(cw_l, actions, m);
  const double gamma = mlfp::theory::gamma(kappa, cw_l, actions);
  const mlfp::BoundCheck result = mlfp::check_bounds(rows, gamma, alpha, actions, slack);
  for (const auto& line : result.verdicts) std::cout << line << "\n";
  return result.ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilevel fixed-point Monte Carlo for discounted control and stopping"};
  app.require_subcommand(1);

  // constants
  double cw_l = 0.0, kappa = 0.0, eps = 0.0, delta = 0.0, slack = 1.05;
  std::size_t actions = 1;
  std::uint64_t m = 1, n = 0, n_max = 1, reps = 2, unit_cost = 1;
  unsigned threads = 0;
  bool no_timing = false;
  std::string model_path, state_csv, states_path, out_path, json_path, report_path;
  std::optional<std::uint64_t> seed_flag;

  auto* constants = app.add_subcommand("constants", "print theory constants as JSON");
  constants->add_option("--cw-l", cw_l, "c_w * L (contraction modulus)")->required();
  constants->add_option("--actions", actions, "number of actions")->required();
  constants->add_option("--M", m, "samples per level step")->required();
  auto* kappa_opt = constants->add_option("--kappa", kappa, "driver data scale");
  auto* eps_opt = constants->add_option("--eps", eps, "target accuracy");
  auto* delta_opt = constants->add_option("--delta", delta, "discount (for simple_min_M)");
  constants->add_option("--R", unit_cost, "unit sample cost")->capture_default_str();

  auto* estimate = app.add_subcommand("estimate", "one estimator evaluation as JSON");
  estimate->add_option("--model", model_path, "model config JSON")->required();
  estimate->add_option("--M", m, "samples per level step")->required();
  estimate->add_option("--n", n, "recursion depth")->required();
  estimate->add_option("--seed", seed_flag, "master seed (default: MLFP_SEED or 0)");
  estimate->add_option("--state", state_csv, "state as comma-separated numbers")->required();

  auto* experiment = app.add_subcommand("experiment", "replication experiment -> CSV");
  experiment->add_option("--model", model_path, "model config JSON")->required();
  experiment->add_option("--M", m, "samples per level step")->required();
  experiment->add_option("--n-max", n_max, "depths 1..n_max")->required();
  experiment->add_option("--reps", reps, "replications (>= 2)")->required();
  experiment->add_option("--seed", seed_flag, "master seed (default: MLFP_SEED or 0)");
  experiment->add_option("--test-states", states_path, "JSON array of states")->required();
  experiment->add_option("--out", out_path, "output CSV path")->required();
  experiment->add_option("--json", json_path, "optional JSON report path");
  experiment->add_option("--threads", threads, "worker threads (0 = hardware)")->capture_default_str();
  experiment->add_flag("--no-timing", no_timing, "write 0 in wall_ms for byte-stable output");

  auto* check = app.add_subcommand("check", "verify a report against the bounds");
  check->add_option("--report", report_path, "CSV report path")->required();
  check->add_option("--cw-l", cw_l, "c_w * L")->required();
  check->add_option("--actions", actions, "number of actions")->required();
  check->add_option("--M", m, "samples per level step")->required();
  check->add_option("--kappa", kappa, "driver data scale")->required();
  check->add_option("--slack", slack, "bound slack multiplier")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors are exit 1 by contract
  }

  try {
    if (constants->parsed()) {
      return cmd_constants(cw_l, actions, m,
                           kappa_opt->count() ? std::optional<double>(kappa) : std::nullopt,
                           eps_opt->count() ? std::optional<double>(eps) : std::nullopt,
                           delta_opt->count() ? std::optional<double>(delta) : std::nullopt,
                           unit_cost);
    }
    const std::uint64_t seed = seed_flag ? *seed_flag : seed_from_env_or(0);
    if (estimate->parsed()) return cmd_estimate(model_path, m, n, seed, state_csv);
    if (experiment->parsed())
      return cmd_experiment(model_path, states_path, out_path, json_path, m, n_max,
                            reps, seed, threads, no_timing);
    if (check->parsed()) return cmd_check(report_path, cw_l, actions, m, kappa, slack);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;  // unreachable with require_subcommand(1)
}
