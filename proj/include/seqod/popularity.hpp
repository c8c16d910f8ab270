#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "seqod/vocabulary.hpp"

namespace seqod {

// Smoothed global action frequencies. Scores are divided by gamma so that an
// action is never flagged merely for being rare: gamma_a = (eps + count_a) /
// (N*eps + total).
struct PopularityPrior {
  std::vector<double> gamma;
  std::vector<double> log_gamma;
  double epsilon = 1.0;

  static PopularityPrior from(const Vocabulary& vocab, double epsilon = 1.0) {
    if (epsilon <= 0.0)
      throw std::invalid_argument("popularity_prior: epsilon must be positive");
    PopularityPrior p;
    p.epsilon = epsilon;
    const size_t n = vocab.size();
    const double denom =
        static_cast<double>(n) * epsilon + static_cast<double>(vocab.total_count());
    p.gamma.resize(n);
    p.log_gamma.resize(n);
    for (size_t a = 0; a < n; ++a) {
      p.gamma[a] = (epsilon + static_cast<double>(vocab.count(static_cast<int32_t>(a)))) / denom;
      p.log_gamma[a] = std::log(p.gamma[a]);
    }
    return p;
  }
};

}  // namespace seqod
