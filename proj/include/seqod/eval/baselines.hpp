#pragma once

#include <cstdint>
#include <vector>

#include "seqod/models/bag.hpp"
#include "seqod/models/hmm.hpp"

namespace seqod {

// Frequency-thresholding baseline: an action is an outlier when its
// smoothed empirical probability falls below the threshold.
std::vector<uint8_t> baseline_bag_detect(const BagOfActionsModel& model,
                                         const Trajectory& x, double threshold);

// Closed-form null FPR: total probability mass of actions with p < threshold
// under i.i.d. sampling from the empirical distribution.
double baseline_bag_fpr(const BagOfActionsModel& model, double threshold);

// Largest threshold whose null FPR stays at or below alpha.
double baseline_bag_threshold_for_fpr(const BagOfActionsModel& model, double alpha);

// Viterbi-emission thresholding baseline: flag position j when
// emit(h_j, x_j) < threshold along the most likely state path.
std::vector<uint8_t> baseline_hmm_detect(const HmmModel& model, const Trajectory& x,
                                         double threshold);

// Null FPR estimated on sequences sampled from the model itself.
double baseline_hmm_fpr(const HmmModel& model, double threshold,
                        const std::vector<size_t>& lengths, size_t n_reps,
                        uint64_t seed);

double baseline_hmm_threshold_for_fpr(const HmmModel& model, double alpha,
                                      const std::vector<size_t>& lengths,
                                      size_t n_reps, uint64_t seed);

}  // namespace seqod
