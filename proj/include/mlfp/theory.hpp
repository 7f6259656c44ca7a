#pragma once
// Convergence-rate and cost constants for the multilevel fixed-point scheme.
//
// Conventions used throughout:
//   cw_l     — product c_w * L: weighted Lipschitz modulus of the driver.
//              Contraction requires cw_l < 1. For the discounted Bellman
//              driver, L = discount and c_w = lambda (weight expansion), so
//              cw_l = lambda * discount.
//   lambda_l — same quantity under its certificate name (lambda * L); the
//              gamma() formula is written in those terms.
//   kappa    — scale of the driver data: a caller-supplied bound with
//              E[|f(X, 0)|^2]^{1/2} <= kappa * w(x) (for Bellman models,
//              kappa = sup |g| / w works). kappa is taken at face value and
//              never inferred from a model.
//
// All integer-valued cost quantities are exact (u128 with overflow checks),
// never floating point: the acceptance comparisons are equality/ordering on
// integers.

#include <cstdint>
#include <utility>

#include "mlfp/util.hpp"

namespace mlfp::theory {

// Geometric contraction factor of the n-level estimator's error bound.
// Requires cw_l < 1 (throws std::invalid_argument naming the contraction
// condition otherwise), actions >= 1, m >= 1. Note alpha < 1 is NOT implied
// for every m — callers check against min_m.
double alpha(double cw_l, std::size_t actions, std::uint64_t m);

// Exponent beta = ln(3M) / ln(1/alpha); requires 0 < alpha < 1.
double beta(std::uint64_t m, double alpha_value);

// Error-scale constant gamma = (3/2) * max of three moment terms.
double gamma(double kappa, double lambda_l, std::size_t actions);

// Least M that makes the scheme contract: the smallest integer strictly
// greater than ((1 + cw_l(2|A|-1)) / (1 - cw_l))^2.
std::uint64_t min_m(double cw_l, std::size_t actions);

// Cruder sufficient level count: least integer >= 4|A|^2 / (1-discount)^2.
std::uint64_t simple_min_m(double discount, std::size_t actions);

// Least n >= 1 with gamma * alpha^n <= eps.
std::uint64_t n_for_eps(double gamma_value, double alpha_value, double eps);

// Canonical cost recursion: C_0 = 0,
//   C_n = sum_{l=0}^{n-1} M^(n-l) * (unit_cost + C_l + [l>=1] C_{l-1}).
// This counts one unit per realized node field; see samples_per_estimate for
// what the pointwise estimator actually draws.
u128 cost_recursion(std::uint64_t n, std::uint64_t m, std::uint64_t unit_cost);

// Closed-form dominating bound unit_cost * (3M)^n, exact integer.
u128 cost_bound(std::uint64_t m, std::uint64_t n, std::uint64_t unit_cost);

// 3 * M * unit_cost * max(1, gamma)^beta * eps^(-beta).
double complexity_budget(std::uint64_t m, double gamma_value, double beta_value,
                         std::uint64_t unit_cost, double eps);

// c = max(beta, 3M * max(1, gamma)^beta).
double c_constant(std::uint64_t m, double gamma_value, double beta_value);

// A-priori fixed-point bounds: with driver-data scale c_f and weight growth
// c_w, the solution v satisfies sup |v|/w <= c_f / (1 - cw_l) and
// E-weighted sup <= c_f * c_w / (1 - cw_l). Returns {first, second}.
std::pair<double, double> solution_bounds(double c_f, double c_w, double l);

// Exact number of transition-sampler invocations one estimator call makes.
// The estimator evaluates child value VECTORS pointwise, so each of the
// |A| components of a child costs its own scalar recursion and the action
// factor compounds per level:
//   T_0 = 0, T_n = sum_{l<n} M^(n-l) * (1 + |A| T_l + [l>=1] |A| T_{l-1}),
//   samples_per_estimate = |A| * T_n.
// For |A| = 1 this coincides with cost_recursion(n, m, 1); for |A| >= 2 and
// n >= 2 it is strictly larger (e.g. M=4, |A|=2: 8, 104, 1320, ... vs the
// per-node-field count 8, 72, 616, ...).
u128 samples_per_estimate(std::uint64_t n, std::uint64_t m, std::size_t actions);

// Scalar optimal-stopping variant: one child component per node, so this is
// exactly cost_recursion(n, m, 1).
u128 samples_per_stopping_estimate(std::uint64_t n, std::uint64_t m);

// Bundle of the rate/scale constants for one problem instance. make() derives
// alpha and gamma from the inputs; beta is filled in only when alpha < 1
// (otherwise it is NaN and eps-dependent quantities are unavailable). If m is
// at least min_m(cw_l, actions), alpha < 1 is guaranteed and checked.
struct TheoryConstants {
  double cw_l = 0.0;
  std::size_t actions = 1;
  std::uint64_t m = 1;
  double kappa = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  static TheoryConstants make(double cw_l, std::size_t actions, std::uint64_t m,
                              double kappa);
  bool contracting() const { return alpha < 1.0; }
};

// Convenience forms over a constants bundle (all require alpha < 1).
std::uint64_t n_for_eps(double eps, const TheoryConstants& tc);
double complexity_budget(double eps, const TheoryConstants& tc,
                         std::uint64_t unit_cost);
double c_constant(const TheoryConstants& tc);

}  // namespace mlfp::theory
