#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "seqod/detector.hpp"

namespace seqod {

struct CalibrationResult {
  double alpha = 0.0;
  double beta = 0.0;
  double achieved_fpr = 0.0;
  size_t n_actions = 0;
  int iterations = 0;
};

// One simulated trajectory per (user, length) pair per repetition; every
// rejection on this corpus rejects a true hypothesis.
Corpus simulate_null(const NullModel& model,
                     const std::vector<std::pair<std::string, size_t>>& user_lengths,
                     size_t n_reps, uint64_t seed);

std::vector<std::pair<std::string, size_t>> user_lengths_of(const Corpus& corpus);

// Fraction of flagged actions; a flag is pvalue <= beta, so on fixed reports
// this is exact and monotone in beta.
double empirical_fpr(double beta, const std::vector<DetectionReport>& reports);
double empirical_fpr(double beta, const Corpus& simulated, const NullModel& model,
                     const PopularityPrior& prior, size_t sample_size, uint64_t seed,
                     unsigned threads = 1);

// Binary search over frozen null reports for the largest beta with
// FPR <= alpha; stops at the p-value granularity 1/min(sample_size, vocab)
// or after max_iter halvings.
CalibrationResult calibrate_from_reports(const std::vector<DetectionReport>& reports,
                                         double alpha, size_t sample_size,
                                         size_t vocab_size, size_t max_iter = 30);

// Binary search for the largest beta whose FPR on a fixed simulated corpus
// stays at or below alpha. The simulated corpus and all candidate-set
// streams are frozen up front, so the search objective is a deterministic
// monotone step function.
CalibrationResult calibrate_beta(const NullModel& model, const PopularityPrior& prior,
                                 double alpha, size_t sample_size,
                                 const std::vector<std::pair<std::string, size_t>>& user_lengths,
                                 size_t n_reps, double tol, size_t max_iter,
                                 uint64_t seed, unsigned threads = 1);

struct CalibrationRecord {
  double alpha = 0.0;
  double beta = 0.0;
  double achieved_fpr = 0.0;
  size_t n_actions = 0;
  int iterations = 0;
  size_t sample_size = 0;
  uint64_t seed = 0;
  std::string model_hash;
};

void save_calibration(const CalibrationRecord& rec, const std::filesystem::path& path);
CalibrationRecord load_calibration(const std::filesystem::path& path);

}  // namespace seqod
