#pragma once

#include <cmath>
#include <cstddef>

// Scalar reference kernels. These are the semantic definition of every
// vectorized variant; the dispatcher falls back to them and the equivalence
// tests compare against them.

namespace seqod::kernels::ref {

inline double reduce_sum(const double* x, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

inline double reduce_max(const double* x, size_t n) {
  double m = -HUGE_VAL;
  for (size_t i = 0; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

inline size_t count_le(const double* x, size_t n, double bound) {
  size_t c = 0;
  for (size_t i = 0; i < n; ++i)
    if (x[i] <= bound) ++c;
  return c;
}

inline void scale(double* x, size_t n, double c) {
  for (size_t i = 0; i < n; ++i) x[i] *= c;
}

inline void axpy(double* y, const double* x, size_t n, double a) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

inline void vec_mul(double* y, const double* x, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] *= x[i];
}

// next[j] = sum_i cur[i] * trans[i*k + j]; the state-propagation step of the
// forward/backward recursions (trans row-major, rows = source state).
inline void chain_step(const double* cur, const double* trans, size_t k,
                       double* next) {
  for (size_t j = 0; j < k; ++j) next[j] = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double c = cur[i];
    if (c == 0.0) continue;
    const double* row = trans + i * k;
    for (size_t j = 0; j < k; ++j) next[j] += c * row[j];
  }
}

// acc[i*k + j] += w * a[i] * b[j]; the pair-marginal accumulation of
// Baum-Welch.
inline void outer_acc(double* acc, const double* a, const double* b, size_t k,
                      double w) {
  for (size_t i = 0; i < k; ++i) {
    const double wa = w * a[i];
    if (wa == 0.0) continue;
    double* row = acc + i * k;
    for (size_t j = 0; j < k; ++j) row[j] += wa * b[j];
  }
}

inline double log_sum_exp(const double* x, size_t n) {
  if (n == 0) return -HUGE_VAL;
  const double m = reduce_max(x, n);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

}  // namespace seqod::kernels::ref
