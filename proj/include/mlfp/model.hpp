#pragma once
// Model interfaces (C++20 concepts) and the built-in model zoo.
//
// Three shapes of model feed the estimators:
//   ControlModel          — discounted control: rewards g(x, a), transition
//                           sampler per action, weight function + certificate.
//   StoppingModel         — discounted optimal stopping: uncontrolled chain,
//                           running payoff g(x), stop payoff G(x).
//   GeneralFixedPointModel— a driver-form fixed point v(x)(a) =
//                           E[f(X^{x,a}, v(X^{x,a}))] with a scalar driver f.
//
// Certificates are caller-supplied bounds, never inferred: lambda bounds the
// expected weight growth E[w(X^{x,a})] <= lambda * w(x), kappa bounds the
// driver data scale. Both feed the theory constants only; estimators don't
// read them.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "mlfp/rng.hpp"

namespace mlfp {

using ActionId = std::uint32_t;

// Hard cap so per-call value vectors live on the stack; the estimator's hot
// loop constructs one per recursion node and heap traffic there would
// dominate. Raise deliberately if a model ever needs more.
inline constexpr std::size_t kMaxActions = 8;

class ActionValues {
 public:
  ActionValues() : n_(0) { v_.fill(0.0); }
  explicit ActionValues(std::size_t n, double fill = 0.0) : n_(n) {
    if (n == 0 || n > kMaxActions)
      throw std::invalid_argument("ActionValues size must be in [1, 8]");
    v_.fill(fill);
  }

  double& operator[](std::size_t a) { return v_[a]; }
  double operator[](std::size_t a) const { return v_[a]; }
  std::size_t size() const { return n_; }

  double max() const {
    double best = v_[0];
    for (std::size_t a = 1; a < n_; ++a) best = std::max(best, v_[a]);
    return best;
  }

  // Lowest index attaining the max, so ties break deterministically.
  ActionId argmax() const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < n_; ++a)
      if (v_[a] > v_[best]) best = a;
    return static_cast<ActionId>(best);
  }

 private:
  std::array<double, kMaxActions> v_;
  std::size_t n_;
};

struct WeightCertificate {
  double lambda = 1.0;  // E[w(next)] <= lambda * w(x)
  double kappa = 1.0;   // driver-data scale bound
};

template <class M>
concept ControlModel = requires(const M& m, const typename M::State& x,
                                ActionId a, StreamHandle& s) {
  { m.action_count() } -> std::convertible_to<std::size_t>;
  { m.discount() } -> std::convertible_to<double>;
  { m.reward(x, a) } -> std::convertible_to<double>;
  { m.sample_transition(x, a, s) } -> std::convertible_to<typename M::State>;
  { m.weight(x) } -> std::convertible_to<double>;
  { m.certificate() } -> std::convertible_to<WeightCertificate>;
  { m.deterministic_transitions() } -> std::convertible_to<bool>;
};

template <class M>
concept StoppingModel = requires(const M& m, const typename M::State& x,
                                 StreamHandle& s) {
  { m.discount() } -> std::convertible_to<double>;
  { m.running_payoff(x) } -> std::convertible_to<double>;
  { m.stop_payoff(x) } -> std::convertible_to<double>;
  { m.sample_chain(x, s) } -> std::convertible_to<typename M::State>;
  { m.weight(x) } -> std::convertible_to<double>;
  { m.certificate() } -> std::convertible_to<WeightCertificate>;
  { m.deterministic_transitions() } -> std::convertible_to<bool>;
};

template <class M>
concept GeneralFixedPointModel = requires(const M& m, const typename M::State& x,
                                          ActionId a, StreamHandle& s,
                                          const ActionValues& r) {
  { m.action_count() } -> std::convertible_to<std::size_t>;
  { m.driver(x, r) } -> std::convertible_to<double>;
  { m.driver_lipschitz() } -> std::convertible_to<double>;
  { m.sample_transition(x, a, s) } -> std::convertible_to<typename M::State>;
  { m.weight(x) } -> std::convertible_to<double>;
  { m.certificate() } -> std::convertible_to<WeightCertificate>;
  { m.deterministic_transitions() } -> std::convertible_to<bool>;
};

// Inverse-CDF walk over one probability row: first index j with u < cdf(j).
// Falls back to the last index so accumulated float error in the row sum can
// never run off the end.
inline std::size_t finite_sample_from_row(std::span<const double> row, double u) {
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += row[j];
    if (u < acc) return j;
  }
  return row.size() - 1;
}

// ---------------------------------------------------------------------------
// Finite-state control model (explicit tables). Also the target type for the
// augmentation of finite stopping problems.

struct FiniteModel {
  using State = int;

  std::string name;
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> reward_table;      // [s * n_actions + a]
  std::vector<double> transition_table;  // [(s * n_actions + a) * n_states + j]
  double delta = 0.0;
  WeightCertificate cert{1.0, 1.0};
  bool deterministic = false;

  std::size_t action_count() const { return n_actions; }
  double discount() const { return delta; }
  double reward(int x, ActionId a) const {
    return reward_table[static_cast<std::size_t>(x) * n_actions + a];
  }
  std::span<const double> row(int x, ActionId a) const {
    return {transition_table.data() +
                (static_cast<std::size_t>(x) * n_actions + a) * n_states,
            n_states};
  }
  int sample_transition(int x, ActionId a, StreamHandle& s) const {
    return static_cast<int>(finite_sample_from_row(row(x, a), s.uniform()));
  }
  double weight(int) const { return 1.0; }
  WeightCertificate certificate() const { return cert; }
  bool deterministic_transitions() const { return deterministic; }

  // Checks shape and row sums (1 within 1e-12), flags point-mass dynamics.
  void finalize();
};

static_assert(ControlModel<FiniteModel>);

// One state, two actions, rewards (1, 0), both actions loop back to the
// state. Exact fixed point Q* = (2, 1) at discount 0.5; the scheme must
// reproduce its Picard iterates exactly (all sampled children coincide).
FiniteModel single_state_det();

// Random finite chain: rewards ~ U[0,1), transition rows are normalized
// uniforms, all drawn from the given seed (rewards first, then rows, both in
// row-major (state, action) order).
FiniteModel chain_finite(std::size_t states, std::size_t actions,
                         std::uint64_t seed, double discount);

// ---------------------------------------------------------------------------
// Smooth continuous-state control model: X' = 0.5 x + mu_a + N(0, I_d),
// reward cos(<c_a, x>) with c_a = (a+1)/sqrt(d) * ones, mu_0 = -0.25 * ones,
// mu_1 = +0.25 * ones. Bounded rewards, w == 1.

struct GaussControl {
  using State = std::vector<double>;

  std::size_t dim = 1;
  double delta = 0.9;
  WeightCertificate cert{1.0, 1.0};

  std::size_t action_count() const { return 2; }
  double discount() const { return delta; }
  double reward(const State& x, ActionId a) const {
    double sum = 0.0;
    for (double xi : x) sum += xi;
    const double scale = static_cast<double>(a + 1) / std::sqrt(static_cast<double>(dim));
    return std::cos(scale * sum);
  }
  State sample_transition(const State& x, ActionId a, StreamHandle& s) const {
    const double drift = (a == 0) ? -0.25 : 0.25;
    State next(dim);
    for (std::size_t j = 0; j < dim; ++j)
      next[j] = 0.5 * x[j] + drift + s.gaussian();
    return next;
  }
  double weight(const State&) const { return 1.0; }
  WeightCertificate certificate() const { return cert; }
  bool deterministic_transitions() const { return false; }
};

static_assert(ControlModel<GaussControl>);

GaussControl gauss_control(std::size_t dim, double discount);

// ---------------------------------------------------------------------------
// Optimal stopping on a +-1 random walk per coordinate. Stop payoff is the
// coordinate mean clamped to [-1, 1]; running payoff a flat 0.05.

struct StoppingWalk {
  using State = std::vector<double>;

  std::size_t dim = 1;
  double delta = 0.9;
  WeightCertificate cert{1.0, 1.05};

  double discount() const { return delta; }
  double running_payoff(const State&) const { return 0.05; }
  double stop_payoff(const State& x) const {
    double sum = 0.0;
    for (double xi : x) sum += xi;
    return std::clamp(sum / static_cast<double>(dim), -1.0, 1.0);
  }
  State sample_chain(const State& x, StreamHandle& s) const {
    State next(dim);
    for (std::size_t j = 0; j < dim; ++j)
      next[j] = x[j] + ((s.uniform() < 0.5) ? -1.0 : 1.0);
    return next;
  }
  double weight(const State&) const { return 1.0; }
  WeightCertificate certificate() const { return cert; }
  bool deterministic_transitions() const { return false; }
};

static_assert(StoppingModel<StoppingWalk>);

StoppingWalk stopping_walk(std::size_t dim, double discount);

// Finite-state stopping problem (explicit tables), mainly for oracle checks.
struct FiniteStopping {
  using State = int;

  std::size_t n_states = 0;
  std::vector<double> transition_table;  // [s * n_states + j]
  std::vector<double> run_payoff;        // g
  std::vector<double> halt_payoff;       // G
  double delta = 0.0;
  WeightCertificate cert{1.0, 1.0};
  bool deterministic = false;

  double discount() const { return delta; }
  double running_payoff(int x) const { return run_payoff[static_cast<std::size_t>(x)]; }
  double stop_payoff(int x) const { return halt_payoff[static_cast<std::size_t>(x)]; }
  std::span<const double> row(int x) const {
    return {transition_table.data() + static_cast<std::size_t>(x) * n_states, n_states};
  }
  int sample_chain(int x, StreamHandle& s) const {
    return static_cast<int>(finite_sample_from_row(row(x), s.uniform()));
  }
  double weight(int) const { return 1.0; }
  WeightCertificate certificate() const { return cert; }
  bool deterministic_transitions() const { return deterministic; }

  void finalize();
};

static_assert(StoppingModel<FiniteStopping>);

// ---------------------------------------------------------------------------
// Stopping -> control embedding. Action 0 stops, action 1 continues; once
// stopped (or from the absorbing hold state) everything is 0. The continue
// component of the control problem's Q-function is the stopping Q-function.

template <class Inner>
struct AugmentedState {
  bool hold = false;
  Inner inner{};
  friend bool operator==(const AugmentedState&, const AugmentedState&) = default;
};

template <StoppingModel B>
struct AugmentedControl {
  using State = AugmentedState<typename B::State>;

  B base;

  std::size_t action_count() const { return 2; }
  double discount() const { return base.discount(); }
  double reward(const State& y, ActionId a) const {
    if (y.hold) return 0.0;
    return (a == 1) ? base.running_payoff(y.inner) : base.stop_payoff(y.inner);
  }
  State sample_transition(const State& y, ActionId a, StreamHandle& s) const {
    if (y.hold || a == 0) return State{true, {}};  // absorb; no draw needed
    return State{false, base.sample_chain(y.inner, s)};
  }
  double weight(const State& y) const { return y.hold ? 1.0 : base.weight(y.inner); }
  WeightCertificate certificate() const { return base.certificate(); }
  bool deterministic_transitions() const { return base.deterministic_transitions(); }
};

template <StoppingModel B>
AugmentedControl<B> augment_stopping(B base) {
  return AugmentedControl<B>{std::move(base)};
}

static_assert(ControlModel<AugmentedControl<StoppingWalk>>);

// Table form of the same embedding (hold state appended as index n_states),
// so the finite-model oracle can solve the augmented problem directly.
FiniteModel augment_finite_stopping(const FiniteStopping& m);

// ---------------------------------------------------------------------------
// Bellman driver: f(x, r) = discount * max_a (g(x, a) + r(a)). Lipschitz in r
// with constant `discount` under the sup norm.

template <ControlModel M>
double bellman_driver(const M& m, const typename M::State& x, const ActionValues& r) {
  double best = m.reward(x, 0) + r[0];
  const std::size_t n = m.action_count();
  for (std::size_t a = 1; a < n; ++a)
    best = std::max(best, m.reward(x, static_cast<ActionId>(a)) + r[a]);
  return m.discount() * best;
}

// Adapts a control model to driver form; the estimator's value for this,
// plus g, must reproduce the Q-estimator exactly.
template <ControlModel M>
struct BellmanWrapped {
  using State = typename M::State;

  const M* base;

  std::size_t action_count() const { return base->action_count(); }
  double driver(const State& x, const ActionValues& r) const {
    return bellman_driver(*base, x, r);
  }
  double driver_lipschitz() const { return base->discount(); }
  State sample_transition(const State& x, ActionId a, StreamHandle& s) const {
    return base->sample_transition(x, a, s);
  }
  double weight(const State& x) const { return base->weight(x); }
  WeightCertificate certificate() const { return base->certificate(); }
  bool deterministic_transitions() const { return base->deterministic_transitions(); }
};

static_assert(GeneralFixedPointModel<BellmanWrapped<FiniteModel>>);

// ---------------------------------------------------------------------------
// JSON model configs (see README for the schema). Unknown families are
// rejected with the list of known ones.

struct LoadedModel {
  std::variant<FiniteModel, GaussControl, StoppingWalk> model;
  std::string family;
  std::uint64_t unit_sample_cost = 1;
};

LoadedModel load_model_config(const std::string& json_text);
LoadedModel load_model_file(const std::string& path);

}  // namespace mlfp
