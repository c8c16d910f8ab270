#include "seqod/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "seqod/kernels_ref.hpp"

#ifdef SEQOD_HAVE_AVX2
namespace seqod::kernels::avx2 {
double reduce_sum(const double*, size_t);
double reduce_max(const double*, size_t);
size_t count_le(const double*, size_t, double);
void scale(double*, size_t, double);
void axpy(double*, const double*, size_t, double);
void vec_mul(double*, const double*, size_t);
void chain_step(const double*, const double*, size_t, double*);
void outer_acc(double*, const double*, const double*, size_t, double);
double log_sum_exp(const double*, size_t);
}  // namespace seqod::kernels::avx2
#endif

namespace seqod::kernels {

namespace {

struct Ops {
  Backend backend;
  double (*reduce_sum)(const double*, size_t);
  double (*reduce_max)(const double*, size_t);
  size_t (*count_le)(const double*, size_t, double);
  void (*scale)(double*, size_t, double);
  void (*axpy)(double*, const double*, size_t, double);
  void (*vec_mul)(double*, const double*, size_t);
  void (*chain_step)(const double*, const double*, size_t, double*);
  void (*outer_acc)(double*, const double*, const double*, size_t, double);
  double (*log_sum_exp)(const double*, size_t);
};

constexpr Ops kScalarOps = {
    Backend::kScalar, ref::reduce_sum, ref::reduce_max, ref::count_le,
    ref::scale,       ref::axpy,       ref::vec_mul,    ref::chain_step,
    ref::outer_acc,   ref::log_sum_exp};

#ifdef SEQOD_HAVE_AVX2
constexpr Ops kAvx2Ops = {
    Backend::kAvx2,  avx2::reduce_sum, avx2::reduce_max, avx2::count_le,
    avx2::scale,     avx2::axpy,       avx2::vec_mul,    avx2::chain_step,
    avx2::outer_acc, avx2::log_sum_exp};
#endif

bool cpu_has_avx2() {
#if defined(SEQOD_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const Ops* select_default() {
  if (const char* env = std::getenv("SEQOD_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return &kScalarOps;
#ifdef SEQOD_HAVE_AVX2
    if (v == "avx2" && cpu_has_avx2()) return &kAvx2Ops;
#endif
  }
#ifdef SEQOD_HAVE_AVX2
  if (cpu_has_avx2()) return &kAvx2Ops;
#endif
  return &kScalarOps;
}

const Ops*& active_ops() {
  static const Ops* ops = select_default();
  return ops;
}

}  // namespace

Backend active_backend() { return active_ops()->backend; }

bool avx2_available() { return cpu_has_avx2(); }

void force_backend(Backend b) {
  switch (b) {
    case Backend::kScalar:
      active_ops() = &kScalarOps;
      return;
    case Backend::kAvx2:
#ifdef SEQOD_HAVE_AVX2
      if (cpu_has_avx2()) {
        active_ops() = &kAvx2Ops;
        return;
      }
#endif
      throw std::runtime_error("kernels: AVX2 backend not available on this CPU/build");
  }
  throw std::runtime_error("kernels: unknown backend");
}

std::string backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

double reduce_sum(const double* x, size_t n) { return active_ops()->reduce_sum(x, n); }
double reduce_max(const double* x, size_t n) { return active_ops()->reduce_max(x, n); }
size_t count_le(const double* x, size_t n, double b) { return active_ops()->count_le(x, n, b); }
void scale(double* x, size_t n, double c) { active_ops()->scale(x, n, c); }
void axpy(double* y, const double* x, size_t n, double a) { active_ops()->axpy(y, x, n, a); }
void vec_mul(double* y, const double* x, size_t n) { active_ops()->vec_mul(y, x, n); }
void chain_step(const double* cur, const double* trans, size_t k, double* next) {
  active_ops()->chain_step(cur, trans, k, next);
}
void outer_acc(double* acc, const double* a, const double* b, size_t k, double w) {
  active_ops()->outer_acc(acc, a, b, k, w);
}
double log_sum_exp(const double* x, size_t n) { return active_ops()->log_sum_exp(x, n); }

}  // namespace seqod::kernels
