// Rate/cost constants: frozen reference values, closed-form cross-checks, and
// ordering invariants. Reference doubles were computed independently (long
// double / bignum evaluation of the same closed forms) and are pinned here.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <string>

#include "mlfp/model.hpp"
#include "mlfp/oracle.hpp"
#include "mlfp/theory.hpp"

using namespace mlfp;
namespace th = mlfp::theory;

namespace {

// Independent route for the contraction factor: same closed form, long double
// arithmetic, different code.
long double alpha_reference(long double cwl, long double actions, long double m) {
  const long double rm = 1.0L / std::sqrt(m);
  const long double s = cwl * (1.0L + actions * rm) + rm;
  return 0.5L * (s + std::sqrt(s * s + 4.0L * rm * cwl * (actions - 1.0L)));
}

std::string dec(u128 v) { return to_decimal(v); }

double as_double(u128 v) { return static_cast<double>(v); }

}  // namespace

TEST_CASE("minimum branching factor for contraction") {
  CHECK(th::min_m(0.5, 2) == 26);
  CHECK(th::min_m(0.0, 1) == 2);
  CHECK(th::min_m(0.0, 5) == 2);
  CHECK(th::min_m(0.1, 2) == 3);
  // Degenerate thresholds (an exact integer square: 16^2 resp. 15^2) must be
  // stepped past, not landed on — the factor at the threshold is exactly 1.
  CHECK(th::min_m(0.6, 5) == 257);
  CHECK(th::min_m(0.7, 3) == 226);
  CHECK_THROWS_AS((void)th::min_m(1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS((void)th::min_m(1.5, 2), std::invalid_argument);
}

TEST_CASE("crude sufficient branching factor") {
  CHECK(th::simple_min_m(0.5, 2) == 64);
  CHECK(th::simple_min_m(0.0, 1) == 4);
  CHECK(th::simple_min_m(0.1, 2) == 20);  // 16/0.81 = 19.75..., rounds up
  CHECK_THROWS_AS((void)th::simple_min_m(1.0, 2), std::invalid_argument);
}

TEST_CASE("contraction factor alpha: frozen values and zero-driver collapse") {
  CHECK(th::alpha(0.0, 3, 4) == 0.5);  // collapses to M^(-1/2), exact at M=4
  for (std::uint64_t m : {2ULL, 9ULL, 16ULL, 25ULL, 100ULL})
    CHECK(std::fabs(th::alpha(0.0, 4, m) - 1.0 / std::sqrt(double(m))) < 1e-15);

  CHECK(std::fabs(th::alpha(0.1, 2, 4) - 0.7653311931459037) < 1e-12);
  CHECK(std::fabs(th::alpha(0.1, 2, 16) - 0.45495097567963927) < 1e-12);
  // Six-figure published approximations.
  CHECK(std::fabs(th::alpha(0.1, 2, 4) - 0.765331) < 1e-6);
  CHECK(std::fabs(th::alpha(0.1, 2, 16) - 0.454951) < 1e-6);

  CHECK_THROWS_AS((void)th::alpha(1.0, 2, 4), std::invalid_argument);
  CHECK_THROWS_AS((void)th::alpha(0.1, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS((void)th::alpha(0.1, 2, 0), std::invalid_argument);
}

TEST_CASE("alpha agrees with an independent long-double evaluation") {
  for (double cwl : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9})
    for (std::size_t a : {1u, 2u, 3u, 5u})
      for (std::uint64_t m : {1ULL, 2ULL, 4ULL, 16ULL, 64ULL, 1000ULL}) {
        const double lib = th::alpha(cwl, a, m);
        const double ref = static_cast<double>(
            alpha_reference(cwl, static_cast<long double>(a),
                            static_cast<long double>(m)));
        CHECK(std::fabs(lib - ref) <= 1e-14 * (1.0 + std::fabs(ref)));
      }
}

TEST_CASE("alpha is below one beyond the threshold and monotone") {
  for (double cwl : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    for (std::size_t a = 1; a <= 5; ++a) {
      const std::uint64_t m0 = th::min_m(cwl, a);
      for (std::uint64_t m = m0; m <= m0 + 10; ++m) {
        const double cur = th::alpha(cwl, a, m);
        CHECK(cur < 1.0);
        // Decreasing in M.
        CHECK(th::alpha(cwl, a, m + 1) <= cur + 1e-15);
        // Increasing in the driver modulus.
        if (cwl + 0.1 < 1.0)
          CHECK(th::alpha(cwl + 0.1, a, m) >= cur - 1e-15);
      }
    }
  }
}

TEST_CASE("exponent beta: definition and frozen values") {
  const double a4 = th::alpha(0.1, 2, 4);
  const double a16 = th::alpha(0.1, 2, 16);
  CHECK(std::fabs(th::beta(4, a4) - 9.2912251949229425) < 1e-9);
  CHECK(std::fabs(th::beta(4, a16) - 3.1551741381328564) < 1e-9);
  // Definition route.
  CHECK(std::fabs(th::beta(7, 0.3) - std::log(21.0) / std::log(1.0 / 0.3)) <
        1e-15);
  CHECK_THROWS_AS((void)th::beta(4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)th::beta(4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)th::beta(4, 1.5), std::invalid_argument);
}

TEST_CASE("error-scale constant gamma") {
  CHECK(th::gamma(0.0, 0.3, 4) == 0.0);
  CHECK(th::gamma(1.0, 0.1, 2) == 2.5);  // dominated by the |A|-moment term
  CHECK(th::gamma(1.0, 0.5, 2) == 3.0);  // dominated by the sup term
  CHECK_THROWS_AS((void)th::gamma(1.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS((void)th::gamma(-1.0, 0.1, 2), std::invalid_argument);
}

TEST_CASE("constants bundle wires the pieces together") {
  const auto tc = th::TheoryConstants::make(0.1, 2, 16, 1.0);
  CHECK(tc.cw_l == 0.1);
  CHECK(tc.actions == 2);
  CHECK(tc.m == 16);
  CHECK(tc.kappa == 1.0);
  CHECK(tc.alpha == th::alpha(0.1, 2, 16));
  CHECK(tc.gamma == th::gamma(1.0, 0.1, 2));
  CHECK(tc.beta == th::beta(16, tc.alpha));
  CHECK(tc.contracting());
  CHECK(th::n_for_eps(0.1, tc) == th::n_for_eps(tc.gamma, tc.alpha, 0.1));
  CHECK(th::complexity_budget(0.5, tc, 1) ==
        th::complexity_budget(16, tc.gamma, tc.beta, 1, 0.5));
  CHECK(th::c_constant(tc) == th::c_constant(16, tc.gamma, tc.beta));

  // Below the contraction threshold the factor exceeds one and the
  // eps-dependent quantities are unavailable.
  const auto loose = th::TheoryConstants::make(0.5, 2, 2, 1.0);
  CHECK_FALSE(loose.contracting());
  CHECK(std::isnan(loose.beta));
  CHECK_THROWS_AS((void)th::complexity_budget(0.5, loose, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)th::c_constant(loose), std::invalid_argument);
}

TEST_CASE("depth needed for a target accuracy") {
  CHECK(th::n_for_eps(0.5, 0.9, 1.0) == 1);  // already within budget at n=1
  CHECK(th::n_for_eps(2.5, th::alpha(0.1, 2, 16), 0.1) == 5);
  CHECK(th::n_for_eps(2.5, th::alpha(0.1, 2, 4), 0.1) == 13);
  CHECK(th::n_for_eps(2.5, 0.454951, 0.1) == 5);
  CHECK(th::n_for_eps(2.5, 0.765331, 0.1) == 13);
  // Exact boundary counts as reached (integer search, no log rounding).
  CHECK(th::n_for_eps(1.0, 0.5, 0.25) == 2);
  CHECK_THROWS_AS((void)th::n_for_eps(2.5, 1.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS((void)th::n_for_eps(2.5, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("cost recursion: frozen values and hand-unrolled identities") {
  CHECK(dec(th::cost_recursion(0, 4, 1)) == "0");
  const char* expected4[] = {"4",     "36",     "308",    "2612",
                             "22132", "187508", "1588596"};
  for (std::uint64_t n = 1; n <= 7; ++n)
    CHECK(dec(th::cost_recursion(n, 4, 1)) == expected4[n - 1]);
  CHECK(dec(th::cost_recursion(13, 4, 1)) == "587450208628");

  // Hand-unrolled closed forms for shallow depths:
  //   C1 = M R;  C2 = 2 M^2 R + M R;  C3 = 4 M^3 R + 3 M^2 R + M R.
  for (std::uint64_t m : {2ULL, 3ULL, 4ULL, 7ULL})
    for (std::uint64_t r : {1ULL, 2ULL, 5ULL}) {
      CHECK(bool(th::cost_recursion(1, m, r) == u128(m) * r));
      CHECK(bool(th::cost_recursion(2, m, r) == u128(2) * m * m * r + m * r));
      CHECK(bool(th::cost_recursion(3, m, r) ==
                 u128(4) * m * m * m * r + u128(3) * m * m * r + m * r));
    }
  // Unit cost scales linearly.
  CHECK(bool(th::cost_recursion(5, 4, 3) == u128(3) * th::cost_recursion(5, 4, 1)));
}

TEST_CASE("closed-form cost bound dominates the recursion") {
  CHECK(dec(th::cost_bound(4, 3, 1)) == "1728");
  CHECK(bool(th::cost_bound(4, 3, 1) >= th::cost_recursion(3, 4, 1)));
  CHECK(dec(th::cost_bound(4, 0, 1)) == "1");
  CHECK(dec(th::cost_bound(3, 5, 2)) == "118098");  // 2 * 9^5
  for (std::uint64_t m = 2; m <= 32; ++m)
    for (std::uint64_t n = 0; n <= 12; ++n)
      CHECK(bool(th::cost_recursion(n, m, 1) <= th::cost_bound(m, n, 1)));
}

TEST_CASE("complexity budget: frozen value and domination over the recursion") {
  const double a16 = th::alpha(0.1, 2, 16);
  const double b16 = th::beta(4, a16);
  const double budget = th::complexity_budget(4, 2.5, b16, 1, 0.5);
  CHECK(std::fabs(budget - 1925.5434682211412) < 1e-6);
  CHECK(std::fabs(budget - 1928.0) < 5.0);  // published two-decimal rounding
  CHECK(th::complexity_budget(4, 0.8, 2.0, 5, 1.0) == 60.0);  // 3 M R, powers = 1

  // c = max(beta, 3 M max(1,gamma)^beta).
  CHECK(std::fabs(th::c_constant(4, 2.5, b16) - 216.14802415908139) < 1e-9);
  CHECK(th::c_constant(4, 0.5, 2.0) == 12.0);

  // Budget dominates realized cost at the depth the accuracy target demands.
  const double a4 = th::alpha(0.1, 2, 4);
  const double b4 = th::beta(4, a4);
  const double g = th::gamma(1.0, 0.1, 2);
  for (double eps : {1.0, 0.5, 0.25, 0.1}) {
    const std::uint64_t n = th::n_for_eps(g, a4, eps);
    CHECK(as_double(th::cost_recursion(n, 4, 1)) <=
          th::complexity_budget(4, g, b4, 1, eps));
  }
  // Log grid over two decades.
  for (int k = 0; k <= 20; ++k) {
    const double eps = std::pow(10.0, -2.0 + 2.0 * k / 20.0);
    const std::uint64_t n = th::n_for_eps(g, a4, eps);
    CHECK(as_double(th::cost_recursion(n, 4, 1)) <=
          th::complexity_budget(4, g, b4, 1, eps));
  }
}

TEST_CASE("a-priori solution bounds") {
  CHECK(th::solution_bounds(0.0, 1.0, 0.5) == std::pair{0.0, 0.0});
  CHECK(th::solution_bounds(0.5, 1.0, 0.5) == std::pair{1.0, 1.0});
  const auto [s1, s2] = th::solution_bounds(1.0, 1.0, 0.1);
  CHECK(std::fabs(s1 - 1.1111111111111112) < 1e-15);
  CHECK(std::fabs(s2 - 1.1111111111111112) < 1e-15);
  CHECK_THROWS_AS((void)th::solution_bounds(1.0, 2.0, 0.5),
                  std::invalid_argument);
}

TEST_CASE("solution bounds hold for exact finite-chain solutions") {
  // sup_x |R(x,a)| <= c_f / (1 - cwL) with R = Q - g, c_f = delta * max|g|,
  // on 100 random chain instances across three discounts.
  const double deltas[] = {0.1, 0.3, 0.5};
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const double delta = deltas[seed % 3];
    const FiniteModel m = chain_finite(5, 2, seed, delta);
    const QTable sol = exact_q(m, 1e-13);
    double gmax = 0.0, rmax = 0.0;
    for (std::size_t x = 0; x < m.n_states; ++x)
      for (std::size_t a = 0; a < m.n_actions; ++a) {
        gmax = std::max(gmax, std::fabs(m.reward_table[x * m.n_actions + a]));
        rmax = std::max(rmax,
                        std::fabs(sol.at(x, a) - m.reward_table[x * m.n_actions + a]));
      }
    const double bound = th::solution_bounds(delta * gmax, 1.0, delta).first;
    CHECK(rmax <= bound + 1e-9);
  }
}

TEST_CASE("sampler-call counts: frozen values, unrolled identities, scalar case") {
  // Depth-n estimator with |A|=2, M=4 draws these exact totals.
  const char* expected[] = {"8", "104", "1320", "16680", "210728", "2662184"};
  for (std::uint64_t n = 1; n <= 6; ++n)
    CHECK(dec(th::samples_per_estimate(n, 4, 2)) == expected[n - 1]);
  CHECK(dec(th::samples_per_estimate(0, 4, 2)) == "0");

  // Hand-unrolled: T1 = M; T2 = M^2 + M + A M^2;
  // T3 = (1 + 2A + A^2) M^3 + (1 + 2A) M^2 + M; total = A * Tn.
  for (std::uint64_t m : {2ULL, 3ULL, 4ULL})
    for (std::uint64_t a : {1ULL, 2ULL, 3ULL}) {
      const u128 t1 = m;
      const u128 t2 = u128(m) * m + m + a * m * m;
      const u128 t3 = (1 + 2 * a + a * a) * u128(m) * m * m +
                      (1 + 2 * a) * u128(m) * m + m;
      CHECK(bool(th::samples_per_estimate(1, m, a) == a * t1));
      CHECK(bool(th::samples_per_estimate(2, m, a) == a * t2));
      CHECK(bool(th::samples_per_estimate(3, m, a) == a * t3));
    }

  // One action collapses the per-component compounding to the plain recursion.
  for (std::uint64_t m : {2ULL, 3ULL, 4ULL})
    for (std::uint64_t n = 0; n <= 8; ++n)
      CHECK(bool(th::samples_per_estimate(n, m, 1) == th::cost_recursion(n, m, 1)));

  // Scalar stopping estimator: exactly the plain recursion.
  CHECK(dec(th::samples_per_stopping_estimate(1, 4)) == "4");
  CHECK(dec(th::samples_per_stopping_estimate(2, 4)) == "36");
  CHECK(dec(th::samples_per_stopping_estimate(3, 4)) == "308");
  for (std::uint64_t m : {2ULL, 5ULL})
    for (std::uint64_t n = 0; n <= 9; ++n)
      CHECK(bool(th::samples_per_stopping_estimate(n, m) ==
                 th::cost_recursion(n, m, 1)));

  // With two or more actions the per-component compounding strictly exceeds
  // the per-node-field recursion from depth 2 on.
  for (std::uint64_t n = 2; n <= 6; ++n)
    CHECK(bool(th::samples_per_estimate(n, 4, 2) >
               u128(2) * th::cost_recursion(n, 4, 1)));
  CHECK(bool(th::samples_per_estimate(1, 4, 2) ==
             u128(2) * th::cost_recursion(1, 4, 1)));
}

TEST_CASE("cost values stay exact far beyond 64 bits") {
  // 12 levels at branching 32 exceeds 2^64; exact integers must not saturate.
  const u128 c = th::cost_recursion(12, 32, 1);
  CHECK(bool(c > (u128(1) << 64)));
  CHECK(bool(c <= th::cost_bound(32, 12, 1)));
  CHECK(parse_u128(dec(c)) == c);
}
