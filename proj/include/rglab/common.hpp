// Shared scalar types and small numeric helpers.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rglab {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// x^k for integer k, usable with both Rational and double.
template <class S>
S pow_int(const S& x, long k) {
  if (k < 0) {
    if (x == S(0)) throw std::domain_error("pow_int: negative power of zero");
    return S(1) / pow_int(x, -k);
  }
  S r(1), b = x;
  while (k > 0) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  return r;
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }
inline double to_double(double x) { return x; }

// (1 + m2 * L^(2j))^(-1), guarded against overflow of L^(2j).
inline double mass_factor(double m2, long L, long j) {
  if (m2 == 0.0) return 1.0;
  double q = 2.0 * static_cast<double>(j) * std::log(static_cast<double>(L)) + std::log(m2);
  if (q > 700.0) return std::exp(-q);
  return 1.0 / (1.0 + std::exp(q));
}

// vartheta_j = 2^{-(j - j_m)_+} with mass scale j_m = max{ j : L^j m <= 1 }.
inline long mass_scale(double m2, long L) {
  if (m2 <= 0.0) return std::numeric_limits<long>::max();
  double jm = -0.5 * std::log(m2) / std::log(static_cast<double>(L));
  return static_cast<long>(std::floor(jm + 1e-12));
}

inline double vartheta(long j, double m2, long L) {
  if (m2 <= 0.0) return 1.0;
  long jm = mass_scale(m2, L);
  if (j <= jm) return 1.0;
  return std::pow(2.0, -static_cast<double>(j - jm));
}

// SplitMix64; used to derive independent per-stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = master ^ (0x51ed27f4a3c7b211ULL + a * 0x9e3779b97f4a7c15ULL);
  splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4fULL;
  return splitmix64(s);
}

// FNV-1a, for stable config hashes in run provenance.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct TruncatedSum {
  double value = 0.0;
  double tail_bound = 0.0;
  long terms = 0;
};

}  // namespace rglab
