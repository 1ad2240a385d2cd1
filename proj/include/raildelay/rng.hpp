#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace raildelay {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Fans the master seed out into one stream per component; the tag is the
/// component name ("gen", "bc", "forecast", ...). Documented in the README.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  return splitmix64(master ^ fnv1a64(tag));
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

/// U[0,1) with 53-bit resolution. Used instead of the standard distributions
/// so that sampled values depend only on the engine, not the stdlib build.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform index in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform_unit(rng) * static_cast<double>(n)) % n;
}

/// Box-Muller; consumes two engine draws per sample.
inline double normal_sample(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  double u1 = uniform_unit(rng);
  double u2 = uniform_unit(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return mean + stddev * z;
}

inline double lognormal_sample(Rng& rng, double mu, double sigma) {
  return std::exp(normal_sample(rng, mu, sigma));
}

/// Knuth's product method; fine for the small rates used here.
inline int poisson_sample(Rng& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform_unit(rng);
  } while (p > limit);
  return k - 1;
}

}  // namespace raildelay
