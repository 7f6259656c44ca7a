#include "mlfp/oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace mlfp {

namespace {

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

double contraction_factor(const FiniteModel& m) {
  return m.certificate().lambda * m.discount();
}

}  // namespace

QTable apply_bellman_q(const FiniteModel& m, const QTable& q) {
  QTable out = q;
  std::vector<double> best(m.n_states);
  for (std::size_t y = 0; y < m.n_states; ++y) {
    double b = q.at(static_cast<int>(y), 0);
    for (std::size_t a = 1; a < m.n_actions; ++a)
      b = std::max(b, q.at(static_cast<int>(y), static_cast<ActionId>(a)));
    best[y] = b;
  }
  for (std::size_t x = 0; x < m.n_states; ++x) {
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      auto row = m.row(static_cast<int>(x), static_cast<ActionId>(a));
      double e = 0.0;
      for (std::size_t y = 0; y < m.n_states; ++y) e += row[y] * best[y];
      out.q[x * m.n_actions + a] =
          m.reward(static_cast<int>(x), static_cast<ActionId>(a)) + m.discount() * e;
    }
  }
  return out;
}

QTable picard_iterate(const FiniteModel& m, std::uint64_t n) {
  QTable q;
  q.n_states = m.n_states;
  q.n_actions = m.n_actions;
  q.q = m.reward_table;  // Q_0 = g
  for (std::uint64_t k = 0; k < n; ++k) {
    QTable next = apply_bellman_q(m, q);
    q.residual = sup_diff(next.q, q.q);
    q.q = std::move(next.q);
    ++q.iterations;
  }
  return q;
}

QTable exact_q(const FiniteModel& m, double tol,
               const std::optional<std::vector<double>>& init) {
  const double cw_l = contraction_factor(m);
  if (!(cw_l < 1.0))
    throw std::invalid_argument("exact_q: lambda * discount must be < 1");
  if (!(tol > 0.0)) throw std::invalid_argument("exact_q: tol must be positive");

  QTable q;
  q.n_states = m.n_states;
  q.n_actions = m.n_actions;
  if (init) {
    if (init->size() != m.n_states * m.n_actions)
      throw std::invalid_argument("exact_q: init table has wrong size");
    q.q = *init;
  } else {
    q.q = m.reward_table;
  }

  const double amplification = (cw_l > 0.0) ? cw_l / (1.0 - cw_l) : 0.0;
  constexpr std::uint64_t kMaxIterations = 2'000'000;
  for (std::uint64_t k = 0; k < kMaxIterations; ++k) {
    QTable next = apply_bellman_q(m, q);
    q.residual = sup_diff(next.q, q.q);
    q.q = std::move(next.q);
    ++q.iterations;
    q.error_certificate = amplification * q.residual;
    // cw_l == 0 means one application already lands on the fixed point.
    if (q.error_certificate <= tol && (cw_l > 0.0 || q.iterations >= 1)) return q;
  }
  throw std::runtime_error("exact_q: did not converge within the iteration cap");
}

StoppingTable apply_stopping(const FiniteStopping& m, const StoppingTable& q) {
  StoppingTable out = q;
  const std::size_t S = m.n_states;
  std::vector<double> best(S);
  for (std::size_t y = 0; y < S; ++y)
    best[y] = std::max(m.stop_payoff(static_cast<int>(y)), q.q[y]);
  for (std::size_t x = 0; x < S; ++x) {
    auto row = m.row(static_cast<int>(x));
    double e = 0.0;
    for (std::size_t y = 0; y < S; ++y) e += row[y] * best[y];
    out.q[x] = m.running_payoff(static_cast<int>(x)) + m.discount() * e;
  }
  return out;
}

StoppingTable picard_stopping(const FiniteStopping& m, std::uint64_t n) {
  StoppingTable q;
  q.q = m.run_payoff;  // Q_0 = g
  for (std::uint64_t k = 0; k < n; ++k) {
    StoppingTable next = apply_stopping(m, q);
    q.residual = sup_diff(next.q, q.q);
    q.q = std::move(next.q);
    ++q.iterations;
  }
  return q;
}

StoppingTable exact_stopping(const FiniteStopping& m, double tol,
                             const std::optional<std::vector<double>>& init) {
  const double cw_l = m.certificate().lambda * m.discount();
  if (!(cw_l < 1.0))
    throw std::invalid_argument("exact_stopping: lambda * discount must be < 1");
  if (!(tol > 0.0)) throw std::invalid_argument("exact_stopping: tol must be positive");

  StoppingTable q;
  if (init) {
    if (init->size() != m.n_states)
      throw std::invalid_argument("exact_stopping: init table has wrong size");
    q.q = *init;
  } else {
    q.q = m.run_payoff;
  }

  const double amplification = (cw_l > 0.0) ? cw_l / (1.0 - cw_l) : 0.0;
  constexpr std::uint64_t kMaxIterations = 2'000'000;
  for (std::uint64_t k = 0; k < kMaxIterations; ++k) {
    StoppingTable next = apply_stopping(m, q);
    q.residual = sup_diff(next.q, q.q);
    q.q = std::move(next.q);
    ++q.iterations;
    q.error_certificate = amplification * q.residual;
    if (q.error_certificate <= tol && (cw_l > 0.0 || q.iterations >= 1)) return q;
  }
  throw std::runtime_error("exact_stopping: did not converge within the iteration cap");
}

}  // namespace mlfp
