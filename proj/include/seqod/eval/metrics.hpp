#pragma once

#include <cstdint>
#include <vector>

#include "seqod/rng.hpp"

namespace seqod {

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Standard definitions; 0 by convention when a denominator vanishes.
Prf1 prf1(const std::vector<uint8_t>& decisions, const std::vector<uint8_t>& truth);

// Counts of (decision outlier/normal) x (relation true/false).
struct ContingencyTable {
  int64_t ot = 0;  // flagged outlier, relation true
  int64_t of = 0;
  int64_t nt = 0;
  int64_t nf = 0;

  int64_t total() const { return ot + of + nt + nf; }
};

ContingencyTable contingency_from(const std::vector<uint8_t>& decisions,
                                  const std::vector<uint8_t>& truth);

// Two-sided Fisher exact test by table-probability ordering: the sum of
// hypergeometric probabilities of all tables with the observed margins whose
// probability does not exceed the observed table's. A table with a zero
// margin admits only itself, giving p = 1.
double fisher_exact(const ContingencyTable& t);

struct BayesianTestConfig {
  double c = 1.0;       // scaling constant on the Dirichlet pseudocounts
  size_t n_mc = 100000; // paired Monte-Carlo draws
};

// Directional Bayesian p-value: 1 - P[P(R=t | D=o) > P(R=t)], with the
// marginal from a Beta posterior and the joint from a four-cell Dirichlet
// whose concentrations are the cell counts plus c-scaled marginal rates.
double bayesian_pvalue(const ContingencyTable& t, const BayesianTestConfig& cfg,
                       Rng& rng);

}  // namespace seqod
