#pragma once
// Full-history recursive multilevel estimators for discounted control,
// driver-form fixed points, and optimal stopping.
//
// Shape of the recursion (depth n, branching parameter M): the level-l slice
// uses M^(n-l) terms; term (l, i) draws one transition from the child
// stream's per-action sub-stream and evaluates two independent child
// estimates at the sampled state — depth l on the child stream (l, i) and
// depth l-1 on the antithetic-level stream (-l, i); their driver difference
// telescopes across levels. Level 0 contributes the plain driver of a
// depth-0 child (which is g for the Q-form, 0 for the driver form). Loop
// order is normative for reproducibility: actions in index order, levels
// n-1 down to 0, i ascending; sums accumulate left to right in 64-bit
// doubles. No memoization: ledger counts are exact by construction.
//
// The three cores are deliberately separate implementations whose float
// operations are aligned, so two identities hold bitwise and are enforced by
// tests rather than by code sharing:
//   * Q-form == g + driver-form with the Bellman driver (BellmanWrapped);
//   * stopping == continue component of the Q-form on the augmented model.
//
// Deterministic transitions collapse the scheme: every i-term in a level is
// identical (the sampled child state never varies and child estimates don't
// depend on the stream), so the estimator evaluates one representative term
// per (action, level) and skips the /M^k average. Values telescope to the
// exact Picard iterate up to ~1 ULP of summation-order noise. The cost
// ledger is charged the canonical full count up front (see
// theory::samples_per_estimate) so accounting stays model-independent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mlfp/model.hpp"
#include "mlfp/rng.hpp"
#include "mlfp/theory.hpp"

namespace mlfp {

namespace detail {

// Each (level, i) summand is the difference of two driver evaluations; a
// single non-finite evaluation always surfaces as a non-finite summand
// (inf - inf is NaN), so checking the summand catches every bad driver value.
inline void require_finite_term(double term) {
  if (!std::isfinite(term))
    throw std::domain_error("estimator: non-finite driver output");
}

template <ControlModel M>
ActionValues q_core(const M& m, const typename M::State& x, const StreamHandle& node,
                    std::uint64_t levels, std::uint64_t m_param, bool collapse,
                    CostLedger* ledger) {
  const std::size_t n_actions = m.action_count();
  ActionValues out(n_actions);
  if (levels == 0) {
    for (std::size_t a = 0; a < n_actions; ++a)
      out[a] = m.reward(x, static_cast<ActionId>(a));
    return out;
  }
  const double delta = m.discount();
  for (std::size_t a = 0; a < n_actions; ++a) {
    double acc = 0.0;
    std::uint64_t mk = m_param;  // M^(levels - l), starting at l = levels-1
    for (std::uint64_t l = levels; l-- > 0;) {
      double s = 0.0;
      const std::uint64_t reps = collapse ? 1 : mk;
      for (std::uint64_t i = 1; i <= reps; ++i) {
        StreamHandle child = node.child(static_cast<std::int64_t>(l), i);
        StreamHandle sub = child.action_substream(static_cast<ActionId>(a));
        if (ledger) ledger->add();
        const auto next = m.sample_transition(x, static_cast<ActionId>(a), sub);
        const ActionValues qpos = q_core(m, next, child, l, m_param, collapse, ledger);
        double term = delta * qpos.max();
        if (l >= 1) {
          StreamHandle anti = node.child(-static_cast<std::int64_t>(l), i);
          const ActionValues qneg = q_core(m, next, anti, l - 1, m_param, collapse, ledger);
          term -= delta * qneg.max();
        }
        require_finite_term(term);
        s += term;
      }
      acc += collapse ? s : s / static_cast<double>(mk);
      if (l != 0 && !collapse) mk *= m_param;
    }
    out[a] = m.reward(x, static_cast<ActionId>(a)) + acc;
  }
  return out;
}

template <GeneralFixedPointModel M>
ActionValues general_core(const M& m, const typename M::State& x,
                          const StreamHandle& node, std::uint64_t levels,
                          std::uint64_t m_param, bool collapse, CostLedger* ledger) {
  const std::size_t n_actions = m.action_count();
  ActionValues out(n_actions);  // V_0 == 0
  if (levels == 0) return out;
  for (std::size_t a = 0; a < n_actions; ++a) {
    double acc = 0.0;
    std::uint64_t mk = m_param;
    for (std::uint64_t l = levels; l-- > 0;) {
      double s = 0.0;
      const std::uint64_t reps = collapse ? 1 : mk;
      for (std::uint64_t i = 1; i <= reps; ++i) {
        StreamHandle child = node.child(static_cast<std::int64_t>(l), i);
        StreamHandle sub = child.action_substream(static_cast<ActionId>(a));
        if (ledger) ledger->add();
        const auto next = m.sample_transition(x, static_cast<ActionId>(a), sub);
        const ActionValues vpos = general_core(m, next, child, l, m_param, collapse, ledger);
        double term = m.driver(next, vpos);
        if (l >= 1) {
          StreamHandle anti = node.child(-static_cast<std::int64_t>(l), i);
          const ActionValues vneg = general_core(m, next, anti, l - 1, m_param, collapse, ledger);
          term -= m.driver(next, vneg);
        }
        require_finite_term(term);
        s += term;
      }
      acc += collapse ? s : s / static_cast<double>(mk);
      if (l != 0 && !collapse) mk *= m_param;
    }
    out[a] = acc;
  }
  return out;
}

template <StoppingModel B>
double stopping_core(const B& m, const typename B::State& x, const StreamHandle& node,
                     std::uint64_t levels, std::uint64_t m_param, bool collapse,
                     CostLedger* ledger) {
  if (levels == 0) return m.running_payoff(x);
  const double delta = m.discount();
  double acc = 0.0;
  std::uint64_t mk = m_param;
  for (std::uint64_t l = levels; l-- > 0;) {
    double s = 0.0;
    const std::uint64_t reps = collapse ? 1 : mk;
    for (std::uint64_t i = 1; i <= reps; ++i) {
      StreamHandle child = node.child(static_cast<std::int64_t>(l), i);
      // The chain draw sits in the continue action's slot (action 1 of the
      // augmented control problem), which is what makes the embedding
      // identity exact.
      StreamHandle sub = child.action_substream(1);
      if (ledger) ledger->add();
      const auto next = m.sample_chain(x, sub);
      const double stop_now = m.stop_payoff(next);
      const double qpos = stopping_core(m, next, child, l, m_param, collapse, ledger);
      double term = delta * std::max(stop_now, qpos);
      if (l >= 1) {
        StreamHandle anti = node.child(-static_cast<std::int64_t>(l), i);
        const double qneg = stopping_core(m, next, anti, l - 1, m_param, collapse, ledger);
        term -= delta * std::max(stop_now, qneg);
      }
      require_finite_term(term);
      s += term;
    }
    acc += collapse ? s : s / static_cast<double>(mk);
    if (l != 0 && !collapse) mk *= m_param;
  }
  return m.running_payoff(x) + acc;
}

inline void require_m(std::uint64_t m_param) {
  if (m_param < 1) throw std::invalid_argument("estimator: M must be >= 1");
}

}  // namespace detail

// Q-form estimator: returns the depth-n approximation of the Bellman
// Q-function at x, one entry per action. n = 0 returns g(x, .) and makes no
// draws. The ledger (optional) receives the exact number of transition
// sampler invocations, which is theory::samples_per_estimate(n, M, |A|).
template <ControlModel M>
ActionValues mlfp_q(const M& model, const typename M::State& x, std::uint64_t m_param,
                    std::uint64_t levels, const StreamHandle& root,
                    CostLedger* ledger = nullptr) {
  detail::require_m(m_param);
  const bool collapse = model.deterministic_transitions();
  if (collapse && ledger) {
    ledger->add(theory::samples_per_estimate(levels, m_param, model.action_count()));
    ledger = nullptr;  // canonical count charged up front; recursion uncounted
  }
  return detail::q_core(model, x, root, levels, m_param, collapse, ledger);
}

// Driver-form estimator for general fixed points v(x)(a) =
// E[f(X^{x,a}, v(X^{x,a}))]. Depth 0 is the zero function.
template <GeneralFixedPointModel M>
ActionValues mlfp_general(const M& model, const typename M::State& x,
                          std::uint64_t m_param, std::uint64_t levels,
                          const StreamHandle& root, CostLedger* ledger = nullptr) {
  detail::require_m(m_param);
  const bool collapse = model.deterministic_transitions();
  if (collapse && ledger) {
    ledger->add(theory::samples_per_estimate(levels, m_param, model.action_count()));
    ledger = nullptr;
  }
  return detail::general_core(model, x, root, levels, m_param, collapse, ledger);
}

// Scalar stopping estimator: depth-n approximation of the continuation value
// Q(x) = g(x) + delta E[max(G(X'), Q(X'))]. Depth 0 returns g(x).
template <StoppingModel B>
double mlfp_stopping(const B& model, const typename B::State& x, std::uint64_t m_param,
                     std::uint64_t levels, const StreamHandle& root,
                     CostLedger* ledger = nullptr) {
  detail::require_m(m_param);
  const bool collapse = model.deterministic_transitions();
  if (collapse && ledger) {
    ledger->add(theory::samples_per_stopping_estimate(levels, m_param));
    ledger = nullptr;
  }
  return detail::stopping_core(model, x, root, levels, m_param, collapse, ledger);
}

inline double value_from_q(const ActionValues& q) { return q.max(); }
inline ActionId greedy_action(const ActionValues& q) { return q.argmax(); }

// Parameter bundle for estimator calls addressed by (master seed, path)
// instead of a pre-derived StreamHandle. The two call styles are equivalent:
// the bundle form derives stream_for_path(master_seed, theta) and forwards.
struct MlfpParams {
  std::uint64_t m = 1;           // samples base M >= 1
  std::uint64_t n = 0;           // recursion depth
  std::uint64_t master_seed = 0;
  CostLedger* ledger = nullptr;  // optional exact sampler-call accounting
};

template <ControlModel M>
ActionValues mlfp_q(const M& model, const MlfpParams& params,
                    const typename M::State& x,
                    const ThetaPath& theta = ThetaPath{}) {
  return mlfp_q(model, x, params.m, params.n,
                stream_for_path(params.master_seed, theta), params.ledger);
}

template <GeneralFixedPointModel M>
ActionValues mlfp_general(const M& model, const MlfpParams& params,
                          const typename M::State& x,
                          const ThetaPath& theta = ThetaPath{}) {
  return mlfp_general(model, x, params.m, params.n,
                      stream_for_path(params.master_seed, theta), params.ledger);
}

template <StoppingModel B>
double mlfp_stopping(const B& model, const MlfpParams& params,
                     const typename B::State& x,
                     const ThetaPath& theta = ThetaPath{}) {
  return mlfp_stopping(model, x, params.m, params.n,
                       stream_for_path(params.master_seed, theta), params.ledger);
}

// Monte Carlo standard deviation of the level-l telescoping summand
// max_b Q_l(X, b) - max_b Q_{l-1}(X, b) at a fixed (x, a), one entry per
// level 0..max_level (level 0 is the un-differenced term). This is the
// quantity whose decay in l justifies the multilevel allocation; tests probe
// that it shrinks on stochastic models and vanishes on deterministic ones.
template <ControlModel M>
std::vector<double> variance_decay_probe(const M& model, const typename M::State& x,
                                         ActionId a, std::uint64_t m_param,
                                         std::uint64_t max_level, std::uint64_t reps,
                                         std::uint64_t seed) {
  detail::require_m(m_param);
  if (reps < 2) throw std::invalid_argument("variance_decay_probe: need reps >= 2");
  const bool collapse = model.deterministic_transitions();
  std::vector<double> sds;
  sds.reserve(max_level + 1);
  for (std::uint64_t l = 0; l <= max_level; ++l) {
    double sum = 0.0, sumsq = 0.0;
    for (std::uint64_t r = 0; r < reps; ++r) {
      StreamHandle node = root_stream(seed ^ r);
      StreamHandle child = node.child(static_cast<std::int64_t>(l), 1);
      StreamHandle sub = child.action_substream(a);
      const auto next = model.sample_transition(x, a, sub);
      const ActionValues qpos =
          detail::q_core(model, next, child, l, m_param, collapse, nullptr);
      double d = qpos.max();
      if (l >= 1) {
        StreamHandle anti = node.child(-static_cast<std::int64_t>(l), 1);
        const ActionValues qneg =
            detail::q_core(model, next, anti, l - 1, m_param, collapse, nullptr);
        d -= qneg.max();
      }
      sum += d;
      sumsq += d * d;
    }
    const double mean = sum / static_cast<double>(reps);
    const double var =
        std::max(0.0, sumsq / static_cast<double>(reps) - mean * mean);
    sds.push_back(std::sqrt(var));
  }
  return sds;
}

}  // namespace mlfp
