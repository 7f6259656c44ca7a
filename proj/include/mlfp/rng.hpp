#pragma once
// Deterministic splittable random streams, keyed by recursion paths.
//
// Every estimator node is addressed by a path of signed 64-bit tags rooted at
// (0); a node's children append (level_tag, index) with index >= 1. A 256-bit
// digest of (master seed, path) keys a counter-based generator, so the k-th
// draw of a stream depends only on (seed, path, k) — never on the order in
// which streams are created or consumed. That makes sibling subtrees safe to
// evaluate in any order and from any thread without coordination, and makes
// every run exactly replayable from (seed, path).
//
// Child digests are derived by chaining two absorb steps onto the parent
// digest. Chaining is prefix-free, so distinct paths give distinct digest
// inputs by construction; the length-prefixed byte encoding of a path (see
// ThetaPath::encode) exists for injectivity tests and debugging and produces
// the same stream via stream_for_path.
//
// The mixer is built on the splitmix64 finalizer (Sebastiano Vigna's
// public-domain code, constants due to David Stafford / the Steele–Lea–Flood
// SplittableRandom line). Statistical quality only — this is not a
// cryptographic PRF.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlfp/util.hpp"

namespace mlfp {

// Bump when any detail of digest derivation or draw extraction changes;
// report rows carry this so archived numbers stay attributable.
inline constexpr const char* kStreamVersion = "splitpath256-v1";

constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

struct Digest {
  std::array<std::uint64_t, 4> w;
  friend bool operator==(const Digest&, const Digest&) = default;
};

// Fold one 64-bit word into the digest. Lanes 0/1 are stirred nonlinearly on
// every step; lanes 2/3 accumulate and are fully mixed at extraction time.
inline Digest absorb(Digest d, std::uint64_t v) {
  d.w[0] = mix64(d.w[0] ^ v);
  d.w[1] = mix64(d.w[1] + d.w[0]);
  d.w[2] += d.w[0];
  d.w[3] ^= d.w[1];
  return d;
}

inline std::uint64_t extract(const Digest& d, std::uint64_t counter) {
  std::uint64_t z = mix64(counter + d.w[0]);
  z = mix64(z ^ d.w[1]);
  z = mix64(z + d.w[2]);
  return mix64(z ^ d.w[3]);
}

inline Digest seed_digest(std::uint64_t master_seed) {
  // Arbitrary distinct odd constants (golden-ratio family) as the IV.
  Digest d{{0x9e3779b97f4a7c15ULL, 0xbf58476d1ce4e5b9ULL,
            0x94d049bb133111ebULL, 0x2545f4914f6cdd1dULL}};
  return absorb(d, master_seed);
}

// Maps a uniform uint64 to [0, 1) with 53 random bits.
constexpr double to_unit_interval(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

double inverse_normal_cdf(double p);  // AS 241 (PPND16), see rng.cpp

// A position in one random stream: digest identifies the stream, counter the
// next draw. Copy freely; copies advance independently.
class StreamHandle {
 public:
  StreamHandle() : d_(seed_digest(0)) {}
  explicit StreamHandle(Digest d) : d_(d) {}

  // Child stream for recursion slot (level_tag, index). Index 0 is reserved
  // for action sub-streams so those can never collide with a real child.
  StreamHandle child(std::int64_t level_tag, std::uint64_t index) const {
    if (index == 0)
      throw std::invalid_argument("stream child index must be >= 1 (0 is reserved)");
    return StreamHandle(
        absorb(absorb(d_, static_cast<std::uint64_t>(level_tag)), index));
  }

  // Per-action sub-stream of this node's stream (reserved index 0 slot).
  StreamHandle action_substream(std::uint32_t action) const {
    return StreamHandle(absorb(absorb(d_, static_cast<std::uint64_t>(action)), 0));
  }

  double uniform() { return to_unit_interval(extract(d_, counter_++)); }
  double gaussian() { return inverse_normal_cdf(uniform()); }

  const Digest& digest() const { return d_; }
  std::uint64_t draws_taken() const { return counter_; }

 private:
  Digest d_;
  std::uint64_t counter_ = 0;
};

inline StreamHandle root_stream(std::uint64_t master_seed) {
  // Root path is (0).
  return StreamHandle(absorb(seed_digest(master_seed), 0));
}

// Explicit node path, for tests/tools that address streams symbolically.
struct ThetaPath {
  std::vector<std::int64_t> entries{0};  // root

  static ThetaPath root() { return ThetaPath{}; }

  ThetaPath child(std::int64_t level_tag, std::uint64_t index) const {
    if (index == 0)
      throw std::invalid_argument("stream child index must be >= 1 (0 is reserved)");
    ThetaPath p = *this;
    p.entries.push_back(level_tag);
    p.entries.push_back(static_cast<std::int64_t>(index));
    return p;
  }

  // Length-prefixed little-endian two's-complement bytes; injective over all
  // paths (the prefix separates e.g. (0,1) from (0,1,...)-extensions).
  std::vector<unsigned char> encode() const {
    std::vector<unsigned char> out;
    out.reserve(8 * (entries.size() + 1));
    auto put_u64 = [&out](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
    };
    put_u64(static_cast<std::uint64_t>(entries.size()));
    for (std::int64_t e : entries) put_u64(static_cast<std::uint64_t>(e));
    return out;
  }

  friend bool operator==(const ThetaPath&, const ThetaPath&) = default;
};

// Same stream a chain of child() calls from root_stream would reach.
inline StreamHandle stream_for_path(std::uint64_t master_seed, const ThetaPath& p) {
  Digest d = seed_digest(master_seed);
  for (std::int64_t e : p.entries) d = absorb(d, static_cast<std::uint64_t>(e));
  return StreamHandle(d);
}

// Exact count of transition-sampler invocations. u128 because canonical
// counts overflow 2^64 well inside the supported (n, M) range.
class CostLedger {
 public:
  void add(u128 k = 1) { n_ = checked_add_u128(n_, k); }
  void merge(const CostLedger& other) { add(other.n_); }
  void reset() { n_ = 0; }
  u128 count() const { return n_; }
  std::string decimal() const { return to_decimal(n_); }

 private:
  u128 n_ = 0;
};

}  // namespace mlfp
