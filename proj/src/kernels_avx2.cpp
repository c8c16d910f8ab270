// AVX2 kernel lane. Compiled with -mavx2 -mfma; only reached when the
// dispatcher has verified CPU support.

#ifdef SEQOD_HAVE_AVX2

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace seqod::kernels::avx2 {

namespace {
inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, shuf));
}
}  // namespace

double reduce_sum(const double* x, size_t n) {
  size_t i = 0;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double reduce_max(const double* x, size_t n) {
  double m = -HUGE_VAL;
  size_t i = 0;
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4)
      acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    m = hmax(acc);
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

size_t count_le(const double* x, size_t n, double bound) {
  const __m256d b = _mm256_set1_pd(bound);
  size_t c = 0;
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(x + i);
    __m256d mask = _mm256_cmp_pd(v, b, _CMP_LE_OQ);
    c += static_cast<size_t>(__builtin_popcount(
        static_cast<unsigned>(_mm256_movemask_pd(mask))));
  }
  for (; i < n; ++i)
    if (x[i] <= bound) ++c;
  return c;
}

void scale(double* x, size_t n, double c) {
  const __m256d vc = _mm256_set1_pd(c);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), vc));
  for (; i < n; ++i) x[i] *= c;
}

void axpy(double* y, const double* x, size_t n, double a) {
  const __m256d va = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void vec_mul(double* y, const double* x, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i,
                     _mm256_mul_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] *= x[i];
}

void chain_step(const double* cur, const double* trans, size_t k, double* next) {
  size_t j = 0;
  for (; j + 4 <= k; j += 4) _mm256_storeu_pd(next + j, _mm256_setzero_pd());
  for (; j < k; ++j) next[j] = 0.0;
  for (size_t i = 0; i < k; ++i) {
    const double c = cur[i];
    if (c == 0.0) continue;
    const double* row = trans + i * k;
    const __m256d vc = _mm256_set1_pd(c);
    size_t jj = 0;
    for (; jj + 4 <= k; jj += 4) {
      __m256d vn = _mm256_loadu_pd(next + jj);
      vn = _mm256_fmadd_pd(vc, _mm256_loadu_pd(row + jj), vn);
      _mm256_storeu_pd(next + jj, vn);
    }
    for (; jj < k; ++jj) next[jj] += c * row[jj];
  }
}

void outer_acc(double* acc, const double* a, const double* b, size_t k, double w) {
  for (size_t i = 0; i < k; ++i) {
    const double wa = w * a[i];
    if (wa == 0.0) continue;
    double* row = acc + i * k;
    const __m256d vwa = _mm256_set1_pd(wa);
    size_t j = 0;
    for (; j + 4 <= k; j += 4) {
      __m256d vr = _mm256_loadu_pd(row + j);
      vr = _mm256_fmadd_pd(vwa, _mm256_loadu_pd(b + j), vr);
      _mm256_storeu_pd(row + j, vr);
    }
    for (; j < k; ++j) row[j] += wa * b[j];
  }
}

double log_sum_exp(const double* x, size_t n) {
  if (n == 0) return -HUGE_VAL;
  const double m = reduce_max(x, n);
  if (!std::isfinite(m)) return m;
  // exp stays scalar (no double-precision exp intrinsic without SVML);
  // the max reduction above is the vectorized part.
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

}  // namespace seqod::kernels::avx2

#endif  // SEQOD_HAVE_AVX2
