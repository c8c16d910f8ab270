#include "seqod/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seqod {

Prf1 prf1(const std::vector<uint8_t>& decisions, const std::vector<uint8_t>& truth) {
  if (decisions.size() != truth.size())
    throw std::invalid_argument("prf1: label vectors differ in length");
  int64_t tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i] && truth[i]) ++tp;
    if (decisions[i] && !truth[i]) ++fp;
    if (!decisions[i] && truth[i]) ++fn;
  }
  Prf1 r;
  r.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.f1 = r.precision + r.recall == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

ContingencyTable contingency_from(const std::vector<uint8_t>& decisions,
                                  const std::vector<uint8_t>& truth) {
  if (decisions.size() != truth.size())
    throw std::invalid_argument("contingency_from: label vectors differ in length");
  ContingencyTable t;
  for (size_t i = 0; i < decisions.size(); ++i) {
    if (decisions[i]) {
      ++(truth[i] ? t.ot : t.of);
    } else {
      ++(truth[i] ? t.nt : t.nf);
    }
  }
  return t;
}

namespace {

double log_choose(int64_t n, int64_t k) {
  return std::lgamma(static_cast<double>(n + 1)) -
         std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

}  // namespace

double fisher_exact(const ContingencyTable& t) {
  if (t.ot < 0 || t.of < 0 || t.nt < 0 || t.nf < 0)
    throw std::invalid_argument("fisher_exact: negative count");
  const int64_t row_o = t.ot + t.of;
  const int64_t col_t = t.ot + t.nt;
  const int64_t col_f = t.of + t.nf;
  const int64_t n = t.total();
  if (n <= 0) throw std::invalid_argument("fisher_exact: empty table");
  if (row_o == 0 || row_o == n || col_t == 0 || col_f == 0) return 1.0;

  const double log_denom = log_choose(n, row_o);
  auto log_p = [&](int64_t k) {
    return log_choose(col_t, k) + log_choose(col_f, row_o - k) - log_denom;
  };
  const double log_obs = log_p(t.ot);

  const int64_t k_lo = std::max<int64_t>(0, row_o - col_f);
  const int64_t k_hi = std::min(row_o, col_t);
  double p = 0.0;
  for (int64_t k = k_lo; k <= k_hi; ++k) {
    const double lp = log_p(k);
    if (lp <= log_obs + 1e-7) p += std::exp(lp);
  }
  return std::min(p, 1.0);
}

double bayesian_pvalue(const ContingencyTable& t, const BayesianTestConfig& cfg,
                       Rng& rng) {
  if (cfg.c <= 0.0) throw std::invalid_argument("bayesian_pvalue: c must be positive");
  if (cfg.n_mc < 1) throw std::invalid_argument("bayesian_pvalue: n_mc must be >= 1");
  const auto n = static_cast<double>(t.total());
  if (!(n > 0.0)) throw std::invalid_argument("bayesian_pvalue: empty table");

  const double pr_t = static_cast<double>(t.ot + t.nt) / n;
  const double pr_f = 1.0 - pr_t;

  const double beta_a = static_cast<double>(t.ot + t.nt) + pr_t;
  const double beta_b = static_cast<double>(t.of + t.nf) + pr_f;
  const double dir[4] = {static_cast<double>(t.ot) + pr_t * cfg.c,
                         static_cast<double>(t.of) + pr_f * cfg.c,
                         static_cast<double>(t.nt) + pr_t * cfg.c,
                         static_cast<double>(t.nf) + pr_f * cfg.c};

  auto gamma_or_zero = [&](double shape) {
    return shape > 0.0 ? rng.gamma(shape) : 0.0;
  };

  size_t hits = 0;
  for (size_t it = 0; it < cfg.n_mc; ++it) {
    double marginal;
    if (beta_a <= 0.0) {
      marginal = 0.0;
    } else if (beta_b <= 0.0) {
      marginal = 1.0;
    } else {
      marginal = rng.beta(beta_a, beta_b);
    }
    const double g_ot = gamma_or_zero(dir[0]);
    const double g_of = gamma_or_zero(dir[1]);
    gamma_or_zero(dir[2]);  // joint draw; cells outside D=o cancel in the
    gamma_or_zero(dir[3]);  // conditional but keep the stream aligned
    const double cond = g_ot + g_of > 0.0 ? g_ot / (g_ot + g_of) : 0.0;
    if (cond > marginal) ++hits;
  }
  return 1.0 - static_cast<double>(hits) / static_cast<double>(cfg.n_mc);
}

}  // namespace seqod
