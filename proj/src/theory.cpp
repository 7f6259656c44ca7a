#include "mlfp/theory.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace mlfp::theory {

namespace {

void require_contracting(double cw_l) {
  if (!(cw_l >= 0.0))
    throw std::invalid_argument("cw_l must be nonnegative");
  if (!(cw_l < 1.0))
    throw std::invalid_argument(
        "contraction condition violated: need cw_l = c_w * L < 1");
}

void require_actions(std::size_t actions) {
  if (actions < 1) throw std::invalid_argument("need at least one action");
}

}  // namespace

double alpha(double cw_l, std::size_t actions, std::uint64_t m) {
  require_contracting(cw_l);
  require_actions(actions);
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  const double a = static_cast<double>(actions);
  const double rm = 1.0 / std::sqrt(static_cast<double>(m));
  const double s = cw_l * (1.0 + a * rm) + rm;
  return 0.5 * (s + std::sqrt(s * s + 4.0 * rm * cw_l * (a - 1.0)));
}

double beta(std::uint64_t m, double alpha_value) {
  if (!(alpha_value > 0.0 && alpha_value < 1.0))
    throw std::invalid_argument("beta needs alpha in (0, 1)");
  return std::log(3.0 * static_cast<double>(m)) / std::log(1.0 / alpha_value);
}

double gamma(double kappa, double lambda_l, std::size_t actions) {
  require_contracting(lambda_l);
  require_actions(actions);
  if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be nonnegative");
  const double a = static_cast<double>(actions);
  const double t1 = kappa / (1.0 - lambda_l);
  const double t2 = kappa * lambda_l / (1.0 - lambda_l) + kappa;
  const double t3 = a * kappa / (a * lambda_l + 1.0);
  return 1.5 * std::max(t1, std::max(t2, t3));
}

std::uint64_t min_m(double cw_l, std::size_t actions) {
  require_contracting(cw_l);
  require_actions(actions);
  const double a = static_cast<double>(actions);
  const double ratio = (1.0 + cw_l * (2.0 * a - 1.0)) / (1.0 - cw_l);
  const double bound = ratio * ratio;
  // Strictly greater than `bound`, so an exact-integer bound still bumps up.
  auto m = static_cast<std::uint64_t>(std::floor(bound)) + 1;
  while (static_cast<double>(m) <= bound) ++m;  // float-edge safety
  // The threshold is exactly where alpha crosses 1, so "strictly greater"
  // must also mean alpha(m) < 1 as evaluated. When the threshold is itself
  // an integer (e.g. cw_l = 0.6, |A| = 5 gives 16^2) the closed form can
  // round onto it; step past until the factor actually contracts.
  while (!(alpha(cw_l, actions, m) < 1.0)) ++m;
  return m;
}

std::uint64_t simple_min_m(double discount, std::size_t actions) {
  require_actions(actions);
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("discount must lie in [0, 1)");
  const double a = static_cast<double>(actions);
  const double bound = 4.0 * a * a / ((1.0 - discount) * (1.0 - discount));
  auto m = static_cast<std::uint64_t>(std::ceil(bound));
  if (static_cast<double>(m) < bound) ++m;
  return m;
}

std::uint64_t n_for_eps(double gamma_value, double alpha_value, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (!(alpha_value > 0.0 && alpha_value < 1.0))
    throw std::invalid_argument("n_for_eps needs alpha in (0, 1)");
  if (!(gamma_value >= 0.0))
    throw std::invalid_argument("gamma must be nonnegative");
  double err = gamma_value * alpha_value;
  std::uint64_t n = 1;
  constexpr std::uint64_t kCap = 1'000'000;
  while (err > eps) {
    err *= alpha_value;
    if (++n > kCap)
      throw std::runtime_error("n_for_eps: target unreachable within cap");
  }
  return n;
}

u128 cost_recursion(std::uint64_t n, std::uint64_t m, std::uint64_t unit_cost) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  std::vector<u128> c(n + 1, 0);
  for (std::uint64_t k = 1; k <= n; ++k) {
    u128 total = 0;
    u128 mpow = m;  // M^(k-l) for l = k-1 downward
    for (std::uint64_t l = k; l-- > 0;) {
      u128 inner = unit_cost;
      inner = checked_add_u128(inner, c[l]);
      if (l >= 1) inner = checked_add_u128(inner, c[l - 1]);
      total = checked_add_u128(total, checked_mul_u128(mpow, inner));
      mpow = checked_mul_u128(mpow, m);
    }
    c[k] = total;
  }
  return c[n];
}

u128 cost_bound(std::uint64_t m, std::uint64_t n, std::uint64_t unit_cost) {
  u128 v = unit_cost;
  for (std::uint64_t k = 0; k < n; ++k) v = checked_mul_u128(v, 3 * m);
  return v;
}

double complexity_budget(std::uint64_t m, double gamma_value, double beta_value,
                         std::uint64_t unit_cost, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  return 3.0 * static_cast<double>(m) * static_cast<double>(unit_cost) *
         std::pow(std::max(1.0, gamma_value), beta_value) *
         std::pow(eps, -beta_value);
}

double c_constant(std::uint64_t m, double gamma_value, double beta_value) {
  return std::max(beta_value, 3.0 * static_cast<double>(m) *
                                  std::pow(std::max(1.0, gamma_value), beta_value));
}

std::pair<double, double> solution_bounds(double c_f, double c_w, double l) {
  const double cw_l = c_w * l;
  require_contracting(cw_l);
  if (!(c_f >= 0.0)) throw std::invalid_argument("c_f must be nonnegative");
  return {c_f / (1.0 - cw_l), c_f * c_w / (1.0 - cw_l)};
}

u128 samples_per_estimate(std::uint64_t n, std::uint64_t m, std::size_t actions) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (actions < 1) throw std::invalid_argument("need at least one action");
  std::vector<u128> t(n + 1, 0);
  for (std::uint64_t k = 1; k <= n; ++k) {
    u128 total = 0;
    u128 mpow = m;
    for (std::uint64_t l = k; l-- > 0;) {
      u128 inner = 1;
      inner = checked_add_u128(inner, checked_mul_u128(actions, t[l]));
      if (l >= 1)
        inner = checked_add_u128(inner, checked_mul_u128(actions, t[l - 1]));
      total = checked_add_u128(total, checked_mul_u128(mpow, inner));
      mpow = checked_mul_u128(mpow, m);
    }
    t[k] = total;
  }
  return checked_mul_u128(actions, t[n]);
}

u128 samples_per_stopping_estimate(std::uint64_t n, std::uint64_t m) {
  return cost_recursion(n, m, 1);
}

TheoryConstants TheoryConstants::make(double cw_l, std::size_t actions,
                                      std::uint64_t m, double kappa) {
  TheoryConstants tc;
  tc.cw_l = cw_l;
  tc.actions = actions;
  tc.m = m;
  tc.kappa = kappa;
  tc.alpha = mlfp::theory::alpha(cw_l, actions, m);
  tc.gamma = mlfp::theory::gamma(kappa, cw_l, actions);
  if (m >= min_m(cw_l, actions) && !(tc.alpha < 1.0))
    throw std::logic_error(
        "constants: alpha >= 1 despite m clearing the contraction threshold");
  tc.beta = tc.alpha < 1.0 ? mlfp::theory::beta(m, tc.alpha)
                           : std::numeric_limits<double>::quiet_NaN();
  return tc;
}

std::uint64_t n_for_eps(double eps, const TheoryConstants& tc) {
  return n_for_eps(tc.gamma, tc.alpha, eps);
}

double complexity_budget(double eps, const TheoryConstants& tc,
                         std::uint64_t unit_cost) {
  if (!(tc.alpha < 1.0))
    throw std::invalid_argument("complexity_budget needs alpha < 1");
  return complexity_budget(tc.m, tc.gamma, tc.beta, unit_cost, eps);
}

double c_constant(const TheoryConstants& tc) {
  if (!(tc.alpha < 1.0))
    throw std::invalid_argument("c_constant needs alpha < 1");
  return c_constant(tc.m, tc.gamma, tc.beta);
}

}  // namespace mlfp::theory
