#pragma once
// Small shared helpers: 128-bit unsigned arithmetic with overflow checks and
// decimal formatting/parsing. Cost counters can exceed 2^64 (e.g. the exact
// sample-count recursion at n = 12, M = 32), so everything cost-related runs
// on unsigned __int128.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mlfp {

using u128 = unsigned __int128;

inline u128 checked_add_u128(u128 a, u128 b) {
  u128 s = a + b;
  if (s < a) throw std::overflow_error("u128 addition overflow");
  return s;
}

inline u128 checked_mul_u128(u128 a, u128 b) {
  if (a == 0 || b == 0) return 0;
  u128 p = a * b;
  if (p / a != b) throw std::overflow_error("u128 multiplication overflow");
  return p;
}

inline std::string to_decimal(u128 v) {
  if (v == 0) return "0";
  char buf[40];  // 2^128 has 39 decimal digits
  int pos = sizeof(buf);
  while (v > 0) {
    buf[--pos] = static_cast<char>('0' + static_cast<unsigned>(v % 10));
    v /= 10;
  }
  return std::string(buf + pos, sizeof(buf) - pos);
}

inline u128 parse_u128(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty integer literal");
  u128 v = 0;
  for (char c : s) {
    if (c < '0' || c > '9')
      throw std::invalid_argument("bad digit in integer literal: " + s);
    v = checked_add_u128(checked_mul_u128(v, 10), static_cast<u128>(c - '0'));
  }
  return v;
}

}  // namespace mlfp
