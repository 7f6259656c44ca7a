#include "mlfp/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mlfp {

namespace {

void check_probability_rows(const std::vector<double>& table, std::size_t n_rows,
                            std::size_t row_len, const std::string& what) {
  if (table.size() != n_rows * row_len)
    throw std::invalid_argument(what + ": transition table has wrong size");
  for (std::size_t r = 0; r < n_rows; ++r) {
    double sum = 0.0;
    for (std::size_t j = 0; j < row_len; ++j) {
      const double p = table[r * row_len + j];
      if (!(p >= 0.0))
        throw std::invalid_argument(what + ": negative transition probability");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw std::invalid_argument(what + ": transition row does not sum to 1");
  }
}

bool rows_are_point_masses(const std::vector<double>& table, std::size_t n_rows,
                           std::size_t row_len) {
  for (std::size_t r = 0; r < n_rows; ++r) {
    bool found_one = false;
    for (std::size_t j = 0; j < row_len; ++j) {
      const double p = table[r * row_len + j];
      if (p == 1.0) {
        if (found_one) return false;
        found_one = true;
      } else if (p != 0.0) {
        return false;
      }
    }
    if (!found_one) return false;
  }
  return true;
}

}  // namespace

void FiniteModel::finalize() {
  if (n_states == 0) throw std::invalid_argument(name + ": need at least one state");
  if (n_actions == 0 || n_actions > kMaxActions)
    throw std::invalid_argument(name + ": action count must be in [1, 8]");
  if (reward_table.size() != n_states * n_actions)
    throw std::invalid_argument(name + ": reward table has wrong size");
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::invalid_argument(name + ": discount must lie in [0, 1)");
  check_probability_rows(transition_table, n_states * n_actions, n_states, name);
  deterministic = rows_are_point_masses(transition_table, n_states * n_actions, n_states);
}

void FiniteStopping::finalize() {
  if (n_states == 0) throw std::invalid_argument("stopping model: need at least one state");
  if (run_payoff.size() != n_states || halt_payoff.size() != n_states)
    throw std::invalid_argument("stopping model: payoff tables have wrong size");
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::invalid_argument("stopping model: discount must lie in [0, 1)");
  check_probability_rows(transition_table, n_states, n_states, "stopping model");
  deterministic = rows_are_point_masses(transition_table, n_states, n_states);
}

FiniteModel single_state_det() {
  FiniteModel m;
  m.name = "single_state_det";
  m.n_states = 1;
  m.n_actions = 2;
  m.reward_table = {1.0, 0.0};
  m.transition_table = {1.0, 1.0};  // both actions loop on the only state
  m.delta = 0.5;
  m.cert = {1.0, 1.0};
  m.finalize();
  return m;
}

FiniteModel chain_finite(std::size_t states, std::size_t actions,
                         std::uint64_t seed, double discount) {
  FiniteModel m;
  {
    // No commas: model ids land in a comma-separated report column.
    std::ostringstream name;
    name << "chain_finite(s=" << states << ";a=" << actions << ";seed=" << seed << ")";
    m.name = name.str();
  }
  m.n_states = states;
  m.n_actions = actions;
  m.delta = discount;
  m.cert = {1.0, 1.0};  // w == 1 and rewards live in [0, 1)

  StreamHandle s = root_stream(seed);
  m.reward_table.resize(states * actions);
  for (double& g : m.reward_table) g = s.uniform();

  m.transition_table.resize(states * actions * states);
  for (std::size_t row = 0; row < states * actions; ++row) {
    double* p = m.transition_table.data() + row * states;
    double sum = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      p[j] = s.uniform();
      sum += p[j];
    }
    for (std::size_t j = 0; j < states; ++j) p[j] /= sum;
  }
  m.finalize();
  return m;
}

GaussControl gauss_control(std::size_t dim, double discount) {
  if (dim == 0) throw std::invalid_argument("gauss_control: dim must be >= 1");
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("gauss_control: discount must lie in [0, 1)");
  GaussControl m;
  m.dim = dim;
  m.delta = discount;
  return m;
}

StoppingWalk stopping_walk(std::size_t dim, double discount) {
  if (dim == 0) throw std::invalid_argument("stopping_walk: dim must be >= 1");
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("stopping_walk: discount must lie in [0, 1)");
  StoppingWalk m;
  m.dim = dim;
  m.delta = discount;
  return m;
}

FiniteModel augment_finite_stopping(const FiniteStopping& m) {
  FiniteModel out;
  out.name = "augmented_stopping";
  const std::size_t S = m.n_states;
  const std::size_t hold = S;
  out.n_states = S + 1;
  out.n_actions = 2;  // 0 = stop, 1 = continue
  out.delta = m.delta;
  out.cert = m.cert;

  out.reward_table.assign(out.n_states * 2, 0.0);
  out.transition_table.assign(out.n_states * 2 * out.n_states, 0.0);
  auto row_of = [&](std::size_t y, std::size_t a) {
    return out.transition_table.data() + (y * 2 + a) * out.n_states;
  };
  for (std::size_t y = 0; y < S; ++y) {
    out.reward_table[y * 2 + 0] = m.halt_payoff[y];
    out.reward_table[y * 2 + 1] = m.run_payoff[y];
    row_of(y, 0)[hold] = 1.0;  // stopping absorbs
    for (std::size_t j = 0; j < S; ++j) row_of(y, 1)[j] = m.transition_table[y * S + j];
  }
  row_of(hold, 0)[hold] = 1.0;
  row_of(hold, 1)[hold] = 1.0;
  out.finalize();
  return out;
}

// ---------------------------------------------------------------------------
// JSON configuration.

namespace {

using nlohmann::json;

const char* const kKnownFamilies =
    "single_state_det, chain_finite, gauss_control, stopping_walk, finite_explicit";

double require_discount(const json& cfg, const char* family) {
  if (!cfg.contains("discount"))
    throw std::invalid_argument(std::string("model config: family '") + family +
                                "' requires a \"discount\" field");
  return cfg.at("discount").get<double>();
}

WeightCertificate read_certificates(const json& cfg, WeightCertificate fallback) {
  if (!cfg.contains("certificates")) return fallback;
  const json& c = cfg.at("certificates");
  WeightCertificate out = fallback;
  if (c.contains("lambda")) out.lambda = c.at("lambda").get<double>();
  if (c.contains("kappa")) out.kappa = c.at("kappa").get<double>();
  if (!(out.lambda > 0.0) || !(out.kappa >= 0.0))
    throw std::invalid_argument("model config: certificates must be positive");
  return out;
}

}  // namespace

LoadedModel load_model_config(const std::string& json_text) {
  json cfg;
  try {
    cfg = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("model config: invalid JSON: ") + e.what());
  }
  if (!cfg.is_object() || !cfg.contains("family"))
    throw std::invalid_argument("model config: expected an object with a \"family\" field");

  const std::string family = cfg.at("family").get<std::string>();
  const json params = cfg.value("params", json::object());

  LoadedModel out;
  out.family = family;
  if (cfg.contains("unit_sample_cost")) {
    const auto r = cfg.at("unit_sample_cost").get<std::int64_t>();
    if (r < 1) throw std::invalid_argument("model config: unit_sample_cost must be >= 1");
    out.unit_sample_cost = static_cast<std::uint64_t>(r);
  }

  if (family == "single_state_det") {
    FiniteModel m = single_state_det();
    if (cfg.contains("discount")) {
      m.delta = cfg.at("discount").get<double>();
      m.finalize();
    }
    m.cert = read_certificates(cfg, m.cert);
    out.model = std::move(m);
  } else if (family == "chain_finite") {
    const auto states = params.value("states", std::size_t{0});
    const auto actions = params.value("actions", std::size_t{0});
    if (states == 0 || actions == 0)
      throw std::invalid_argument(
          "model config: chain_finite needs params.states and params.actions");
    const auto seed = params.value("seed", std::uint64_t{0});
    FiniteModel m = chain_finite(states, actions, seed, require_discount(cfg, "chain_finite"));
    m.cert = read_certificates(cfg, m.cert);
    out.model = std::move(m);
  } else if (family == "gauss_control") {
    const auto dim = params.value("dim", std::size_t{0});
    if (dim == 0) throw std::invalid_argument("model config: gauss_control needs params.dim");
    GaussControl m = gauss_control(dim, require_discount(cfg, "gauss_control"));
    m.cert = read_certificates(cfg, m.cert);
    out.model = std::move(m);
  } else if (family == "stopping_walk") {
    const auto dim = params.value("dim", std::size_t{0});
    if (dim == 0) throw std::invalid_argument("model config: stopping_walk needs params.dim");
    StoppingWalk m = stopping_walk(dim, require_discount(cfg, "stopping_walk"));
    m.cert = read_certificates(cfg, m.cert);
    out.model = std::move(m);
  } else if (family == "finite_explicit") {
    FiniteModel m;
    m.name = "finite_explicit";
    if (!params.contains("rewards") || !params.contains("transition"))
      throw std::invalid_argument(
          "model config: finite_explicit needs params.rewards and params.transition");
    const auto& rw = params.at("rewards");    // [state][action]
    const auto& tr = params.at("transition"); // [state][action][state]
    m.n_states = rw.size();
    if (m.n_states == 0) throw std::invalid_argument("model config: empty reward table");
    m.n_actions = rw.at(0).size();
    for (const auto& row : rw) {
      if (row.size() != m.n_actions)
        throw std::invalid_argument("model config: ragged reward table");
      for (const auto& v : row) m.reward_table.push_back(v.get<double>());
    }
    if (tr.size() != m.n_states)
      throw std::invalid_argument("model config: transition table state count mismatch");
    for (const auto& per_state : tr) {
      if (per_state.size() != m.n_actions)
        throw std::invalid_argument("model config: transition table action count mismatch");
      for (const auto& row : per_state) {
        if (row.size() != m.n_states)
          throw std::invalid_argument("model config: transition row length mismatch");
        for (const auto& v : row) m.transition_table.push_back(v.get<double>());
      }
    }
    m.delta = require_discount(cfg, "finite_explicit");
    m.cert = read_certificates(cfg, m.cert);
    m.finalize();
    out.model = std::move(m);
  } else {
    throw std::invalid_argument("model config: unknown family '" + family +
                                "' (known: " + kKnownFamilies + ")");
  }
  return out;
}

LoadedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("model config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model_config(buf.str());
}

}  // namespace mlfp
