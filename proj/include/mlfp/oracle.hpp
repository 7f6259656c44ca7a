#pragma once
// Exact references for finite-state models: Picard iterates of the Bellman
// Q-operator and fixed points solved to a requested tolerance with an
// a-posteriori contraction certificate. These are the trusted side of every
// estimator comparison, so they share no code with the estimators.

#include <cstdint>
#include <optional>
#include <vector>

#include "mlfp/model.hpp"

namespace mlfp {

struct QTable {
  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<double> q;  // [s * n_actions + a]

  double residual = 0.0;           // sup-norm step size of the last update
  double error_certificate = 0.0;  // cw_l/(1-cw_l) * residual >= true error
  std::uint64_t iterations = 0;

  double at(int x, ActionId a) const {
    return q[static_cast<std::size_t>(x) * n_actions + a];
  }
  double state_value(int x) const {
    double best = at(x, 0);
    for (std::size_t a = 1; a < n_actions; ++a) best = std::max(best, at(x, static_cast<ActionId>(a)));
    return best;
  }
};

// One Bellman application: (T q)(x, a) = g(x, a) + delta * E_xa[max_b q(., b)].
QTable apply_bellman_q(const FiniteModel& m, const QTable& q);

// n-fold Picard iterate from Q_0 = g. picard_iterate(m, 0) is g itself.
QTable picard_iterate(const FiniteModel& m, std::uint64_t n);

// Iterates to a fixed point until the contraction certificate
// lambda*delta/(1 - lambda*delta) * residual drops to tol. Custom starting
// tables support uniqueness checks. Throws if delta*lambda >= 1.
QTable exact_q(const FiniteModel& m, double tol,
               const std::optional<std::vector<double>>& init = std::nullopt);

// Finite optimal stopping: value table Q(x) of the continuation problem
//   Q(x) = g(x) + delta * E_x[max(G(X'), Q(X'))].
struct StoppingTable {
  std::vector<double> q;
  double residual = 0.0;
  double error_certificate = 0.0;
  std::uint64_t iterations = 0;
};

StoppingTable apply_stopping(const FiniteStopping& m, const StoppingTable& q);
StoppingTable picard_stopping(const FiniteStopping& m, std::uint64_t n);
StoppingTable exact_stopping(const FiniteStopping& m, double tol,
                             const std::optional<std::vector<double>>& init = std::nullopt);

}  // namespace mlfp
