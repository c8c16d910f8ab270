#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "seqod/null_model.hpp"
#include "seqod/popularity.hpp"

namespace seqod {

struct DetectorConfig {
  double beta = 0.05;        // rejection probability, flag iff pvalue <= beta
  size_t sample_size = 500;  // candidate actions drawn per position
  uint64_t seed = 1;
  double tie_tolerance = 1e-12;  // log-space score equality window
};

struct ActionResult {
  size_t position = 0;
  int32_t token = 0;
  double score = 0.0;  // popularity-normalized log score of the observed action
  size_t rank = 0;
  double pvalue = 1.0;
  bool outlier = false;
};

struct DetectionReport {
  std::string user;
  std::vector<ActionResult> actions;
};

// Candidate set of size min(sample_size, vocab_size) drawn uniformly without
// replacement; the observed action replaces a uniformly chosen element when
// not drawn, keeping the set size (and the p-value denominator) fixed.
std::vector<int32_t> sample_action_set(size_t vocab_size, size_t sample_size,
                                       int32_t forced, Rng& rng);

// log P(x with x_j := a) - log gamma_a.
double replacement_score(const NullModel& model, const PopularityPrior& prior,
                         const Trajectory& x, size_t j, int32_t a);

// Rank-test p-value of position j against a freshly drawn candidate set.
double action_pvalue(const NullModel& model, const PopularityPrior& prior,
                     const Trajectory& x, size_t j, size_t sample_size, Rng& rng,
                     double tie_tolerance = 1e-12);

// Every position tested independently; per-position RNG streams are derived
// from (seed, user, position), so reports are identical regardless of
// processing order or thread count.
DetectionReport detect(const Trajectory& x, const NullModel& model,
                       const PopularityPrior& prior, const DetectorConfig& config);

std::vector<DetectionReport> detect_corpus(const Corpus& corpus, const NullModel& model,
                                           const PopularityPrior& prior,
                                           const DetectorConfig& config,
                                           unsigned threads = 1);

// Tail bound on the sampled-vs-full p-value gap: exp(-2 eps^2 T).
double sampling_bound(size_t sample_size, double eps);

void write_reports_csv(std::ostream& out, const std::vector<DetectionReport>& reports,
                       const Vocabulary& vocab);

}  // namespace seqod
