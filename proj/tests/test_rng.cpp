// Stream derivation, statistical quality, path encoding, and exact cost
// counting. Statistical thresholds are fixed numbers (not re-derived at run
// time) so a behavior change in the generator shows up as a hard failure.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "mlfp/rng.hpp"

using namespace mlfp;

namespace {

std::vector<double> take(StreamHandle s, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = s.uniform();
  return v;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  double num = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(va * vb);
}

constexpr std::size_t kCorrN = 100'000;
const double kCorrBound = 4.0 / std::sqrt(static_cast<double>(kCorrN));

// Forward normal CDF via erfc: the independent route used to cross-check the
// inverse-CDF implementation.
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("same seed replays identical draws") {
  StreamHandle a = root_stream(42);
  StreamHandle b = root_stream(42);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    const double y = b.uniform();
    CHECK(x == y);
  }
}

TEST_CASE("seed zero is an ordinary seed") {
  StreamHandle s = root_stream(0);
  std::vector<double> v = take(s, 1000);
  for (double x : v) {
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  // Not degenerate: draws spread out.
  CHECK(*std::max_element(v.begin(), v.end()) > 0.9);
  CHECK(*std::min_element(v.begin(), v.end()) < 0.1);
}

TEST_CASE("adjacent seeds give uncorrelated streams") {
  const auto a = take(root_stream(42), kCorrN);
  const auto b = take(root_stream(43), kCorrN);
  CHECK(std::fabs(correlation(a, b)) < kCorrBound);
}

TEST_CASE("child derivation is pure and order-independent") {
  StreamHandle parent = root_stream(7);
  StreamHandle c1 = parent.child(3, 2);
  // Consuming parent draws must not move children: derivation keys off the
  // digest, not the counter.
  (void)parent.uniform();
  (void)parent.uniform();
  StreamHandle c2 = parent.child(3, 2);
  CHECK(c1.digest() == c2.digest());

  // Sibling derivation order is irrelevant.
  StreamHandle p2 = root_stream(7);
  StreamHandle s1_first = p2.child(1, 1);
  StreamHandle s2_first = p2.child(1, 2);
  StreamHandle p3 = root_stream(7);
  StreamHandle s2_again = p3.child(1, 2);
  StreamHandle s1_again = p3.child(1, 1);
  CHECK(s1_first.digest() == s1_again.digest());
  CHECK(s2_first.digest() == s2_again.digest());
}

TEST_CASE("positive and negative level tags address distinct streams") {
  StreamHandle parent = root_stream(11);
  StreamHandle pos = parent.child(1, 1);
  StreamHandle neg = parent.child(-1, 1);
  CHECK_FALSE(pos.digest() == neg.digest());
  const auto a = take(pos, kCorrN);
  const auto b = take(neg, kCorrN);
  CHECK(std::fabs(correlation(a, b)) < kCorrBound);
}

TEST_CASE("child index zero is rejected") {
  StreamHandle parent = root_stream(1);
  CHECK_THROWS_AS((void)parent.child(2, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)ThetaPath::root().child(2, 0), std::invalid_argument);
}

TEST_CASE("chained derivation matches path-addressed derivation") {
  // Deterministic pseudo-random path walk, rebuilt two ways.
  std::uint64_t state = 99;
  auto next = [&state]() {
    state = mix64(state + 0x9e3779b97f4a7c15ULL);
    return state;
  };
  for (int rep = 0; rep < 50; ++rep) {
    const std::uint64_t seed = next();
    StreamHandle chained = root_stream(seed);
    ThetaPath path = ThetaPath::root();
    const int depth = static_cast<int>(next() % 8);
    for (int d = 0; d < depth; ++d) {
      const auto tag = static_cast<std::int64_t>(next() % 21) - 10;
      const std::uint64_t index = next() % 1000 + 1;
      chained = chained.child(tag, index);
      path = path.child(tag, index);
    }
    StreamHandle direct = stream_for_path(seed, path);
    CHECK(chained.digest() == direct.digest());
  }
}

TEST_CASE("path encoding is injective up to length 64") {
  std::uint64_t state = 2024;
  auto next = [&state]() {
    state = mix64(state + 0x9e3779b97f4a7c15ULL);
    return state;
  };
  std::vector<ThetaPath> paths;
  // Random paths, biased toward small entries so that a broken
  // (concatenation-without-length) encoding would collide.
  for (int i = 0; i < 4000; ++i) {
    ThetaPath p;
    p.entries.clear();
    const std::size_t len = next() % 65;
    for (std::size_t k = 0; k < len; ++k)
      p.entries.push_back(static_cast<std::int64_t>(next() % 5) - 2);
    paths.push_back(p);
  }
  // Adversarial pairs: sign order, prefix extension, zero padding.
  paths.push_back(ThetaPath{{0, 1, -1}});
  paths.push_back(ThetaPath{{0, -1, 1}});
  paths.push_back(ThetaPath{{0, 1}});
  paths.push_back(ThetaPath{{0, 1, 0}});
  paths.push_back(ThetaPath{{0}});
  paths.push_back(ThetaPath{{0, 0}});
  paths.push_back(ThetaPath{{}});

  std::map<std::vector<unsigned char>, std::size_t> seen;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    auto [it, inserted] = seen.emplace(paths[i].encode(), i);
    if (!inserted) {
      // Equal encodings are only allowed for equal paths.
      CHECK(paths[it->second] == paths[i]);
    }
  }
}

TEST_CASE("sign-swapped sibling paths derive distinct streams") {
  const ThetaPath a{{0, 1, -1}};
  const ThetaPath b{{0, -1, 1}};
  CHECK_FALSE(a == b);
  StreamHandle sa = stream_for_path(5, a);
  StreamHandle sb = stream_for_path(5, b);
  CHECK_FALSE(sa.digest() == sb.digest());
  CHECK(std::fabs(correlation(take(sa, kCorrN), take(sb, kCorrN))) < kCorrBound);
}

TEST_CASE("sibling streams are pairwise uncorrelated") {
  // 1000 siblings; correlation checked on a fixed spread of pairs (full
  // pairwise at this threshold would trip on chance for any generator).
  constexpr std::size_t kSiblings = 1000;
  StreamHandle parent = root_stream(2718);
  std::vector<StreamHandle> sib;
  sib.reserve(kSiblings);
  for (std::size_t i = 1; i <= kSiblings; ++i) sib.push_back(parent.child(2, i));

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 1; i <= 30; ++i) pairs.emplace_back(0, i);
  for (std::size_t i = 0; i < 30; ++i) pairs.emplace_back(i, i + 1);
  for (std::size_t i = 0; i < 60; ++i)
    pairs.emplace_back(i, (7 * i + 13) % kSiblings);

  std::map<std::size_t, std::vector<double>> cache;
  auto draws_of = [&](std::size_t i) -> const std::vector<double>& {
    auto it = cache.find(i);
    if (it == cache.end()) it = cache.emplace(i, take(sib[i], kCorrN)).first;
    return it->second;
  };
  for (auto [i, j] : pairs) {
    if (i == j) continue;
    CHECK(std::fabs(correlation(draws_of(i), draws_of(j))) < kCorrBound);
  }
}

TEST_CASE("uniform marginals: mean and KS distance") {
  constexpr std::size_t kN = 1'000'000;
  std::vector<double> v = take(root_stream(314159), kN);
  double sum = 0;
  for (double x : v) {
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    sum += x;
  }
  const double mean = sum / static_cast<double>(kN);
  CHECK(std::fabs(mean - 0.5) < 0.002);

  std::sort(v.begin(), v.end());
  double d = 0;
  for (std::size_t i = 0; i < kN; ++i) {
    const double hi = static_cast<double>(i + 1) / kN - v[i];
    const double lo = v[i] - static_cast<double>(i) / kN;
    d = std::max(d, std::max(hi, lo));
  }
  // 0.001-significance Kolmogorov-Smirnov critical value for n = 1e6.
  CHECK(d < 0.0019495);
}

TEST_CASE("draw counter tracks position; copies advance independently") {
  StreamHandle s = root_stream(9);
  CHECK(s.draws_taken() == 0);
  const double first = s.uniform();
  (void)s.uniform();
  (void)s.uniform();
  CHECK(s.draws_taken() == 3);

  StreamHandle copy = s;  // same stream, same position
  const double from_copy = copy.uniform();
  const double from_orig = s.uniform();
  CHECK(from_copy == from_orig);  // both produce draw #4
  CHECK(copy.draws_taken() == 4);
  CHECK(s.draws_taken() == 4);

  // Replay from scratch reproduces draw #1.
  StreamHandle replay = root_stream(9);
  CHECK(replay.uniform() == first);
}

TEST_CASE("inverse normal CDF: exactness, symmetry, round trip") {
  CHECK(inverse_normal_cdf(0.5) == 0.0);
  CHECK(std::fabs(inverse_normal_cdf(0.975) - 1.959963984540054) < 1e-12);
  CHECK(std::fabs(inverse_normal_cdf(0.8413447460685429) - 1.0) < 1e-12);

  const double ps[] = {1e-10, 1e-6, 1e-3, 0.01, 0.1, 0.3,
                       0.5,   0.7,  0.9,  0.99, 1.0 - 1e-6};
  double prev = -std::numeric_limits<double>::infinity();
  for (double p : ps) {
    const double x = inverse_normal_cdf(p);
    CHECK(x > prev);  // strictly increasing on the grid
    prev = x;
    // Symmetry about the median, where 1-p is representable to ~1 ulp of p
    // (for tinier p the rounding of 1-p itself dominates, not the function).
    if (p >= 1e-6)
      CHECK(std::fabs(x + inverse_normal_cdf(1.0 - p)) < 1e-9 * (1.0 + std::fabs(x)));
    // Independent forward route: erfc-based CDF returns p.
    const double back = normal_cdf(x);
    CHECK(std::fabs(back - p) < 1e-12 * std::min(p, 1.0 - p) + 1e-16);
  }

  CHECK_THROWS_AS((void)inverse_normal_cdf(0.0), std::domain_error);
  CHECK_THROWS_AS((void)inverse_normal_cdf(1.0), std::domain_error);
  CHECK_THROWS_AS((void)inverse_normal_cdf(-0.25), std::domain_error);
}

TEST_CASE("gaussian draws have standard moments") {
  constexpr std::size_t kN = 100'000;
  StreamHandle s = root_stream(77);
  double sum = 0, sumsq = 0;
  for (std::size_t i = 0; i < kN; ++i) {
    const double g = s.gaussian();
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / kN;
  const double var = sumsq / kN - mean * mean;
  CHECK(std::fabs(mean) < 4.0 / std::sqrt(static_cast<double>(kN)));
  CHECK(std::fabs(var - 1.0) < 0.03);
}

TEST_CASE("cost ledger: exact 128-bit arithmetic") {
  CostLedger ledger;
  CHECK(ledger.count() == 0);
  CHECK(ledger.decimal() == "0");
  ledger.add();
  ledger.add(41);
  CHECK(ledger.decimal() == "42");

  CostLedger other;
  u128 big = 1;
  for (int i = 0; i < 100; ++i) big *= 2;  // 2^100
  other.add(big);
  ledger.merge(other);
  CHECK(ledger.decimal() == "1267650600228229401496703205418");  // 2^100 + 42

  CHECK(parse_u128(ledger.decimal()) == ledger.count());
  ledger.reset();
  CHECK(ledger.count() == 0);
}

TEST_CASE("128-bit helpers detect overflow and round-trip decimals") {
  const u128 max128 = ~static_cast<u128>(0);
  CHECK(to_decimal(max128) == "340282366920938463463374607431768211455");
  CHECK(parse_u128("340282366920938463463374607431768211455") == max128);
  CHECK_THROWS_AS((void)checked_add_u128(max128, 1), std::overflow_error);
  const u128 two64 = static_cast<u128>(1) << 64;
  CHECK_THROWS_AS((void)checked_mul_u128(two64, two64), std::overflow_error);
  CHECK(checked_mul_u128(two64, 3) == two64 * 3);
  CHECK_THROWS_AS((void)parse_u128("not-a-number"), std::invalid_argument);
}

TEST_CASE("stream version identifier is stable") {
  CHECK(std::string(kStreamVersion) == "splitpath256-v1");
}
