#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace seqod {

// Seeded random stream. The engine is std::mt19937_64; every distribution on
// top of it is implemented here, so draw sequences are identical across
// standard libraries and stay frozen for the regression tests.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; consumes exactly two uniforms per call (no cached spare,
  // keeps derived streams reproducible regardless of call interleaving).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1.
  double gamma(double shape, double scale = 1.0) {
    if (shape <= 0.0 || scale <= 0.0)
      throw std::invalid_argument("Rng::gamma: shape and scale must be positive");
    if (shape < 1.0) {
      const double u = uniform_open();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  void dirichlet(std::span<const double> alpha, std::span<double> out) {
    double total = 0.0;
    for (size_t i = 0; i < alpha.size(); ++i) {
      out[i] = gamma(alpha[i]);
      total += out[i];
    }
    for (size_t i = 0; i < alpha.size(); ++i) out[i] /= total;
  }

  std::vector<double> dirichlet(std::span<const double> alpha) {
    std::vector<double> out(alpha.size());
    dirichlet(alpha, out);
    return out;
  }

  // Index draw proportional to nonnegative weights (need not be normalized).
  size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0))
      throw std::runtime_error("Rng::categorical: weights sum to zero");
    double u = uniform() * total;
    for (size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

 private:
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  std::mt19937_64 engine_;
};

namespace detail {
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Stage/stream seed derivation: one master seed plus a label (and optional
// numeric qualifiers) give independent, order-free streams, so parallel and
// serial runs agree and stages can be rerun in isolation.
inline uint64_t derive_seed(uint64_t master, std::string_view label,
                            uint64_t a = 0, uint64_t b = 0) {
  uint64_t h = 0xcbf29ce484222325ULL ^ detail::splitmix64(master);
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h = detail::splitmix64(h ^ detail::splitmix64(a));
  h = detail::splitmix64(h ^ detail::splitmix64(b + 0x632be59bd9b4e019ULL));
  return h;
}

inline uint64_t hash_string(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace seqod
