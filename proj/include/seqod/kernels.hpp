#pragma once

#include <cstddef>
#include <span>
#include <string>

// Runtime-dispatched vector kernels. The scalar reference implementations in
// kernels_ref.hpp are always available; an AVX2 lane is selected at startup
// when the CPU supports it. force_backend() pins a lane (used by the
// equivalence tests and the SEQOD_KERNELS env var).

namespace seqod::kernels {

enum class Backend { kScalar, kAvx2 };

Backend active_backend();
bool avx2_available();
void force_backend(Backend b);  // throws if the lane is not available
std::string backend_name(Backend b);

double reduce_sum(const double* x, size_t n);
double reduce_max(const double* x, size_t n);
size_t count_le(const double* x, size_t n, double bound);
void scale(double* x, size_t n, double c);
void axpy(double* y, const double* x, size_t n, double a);
void vec_mul(double* y, const double* x, size_t n);
void chain_step(const double* cur, const double* trans, size_t k, double* next);
void outer_acc(double* acc, const double* a, const double* b, size_t k, double w);
double log_sum_exp(const double* x, size_t n);

inline double reduce_sum(std::span<const double> x) { return reduce_sum(x.data(), x.size()); }
inline double reduce_max(std::span<const double> x) { return reduce_max(x.data(), x.size()); }
inline size_t count_le(std::span<const double> x, double b) { return count_le(x.data(), x.size(), b); }
inline double log_sum_exp(std::span<const double> x) { return log_sum_exp(x.data(), x.size()); }

}  // namespace seqod::kernels
