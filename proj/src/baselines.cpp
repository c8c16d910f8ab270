#include "seqod/eval/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace seqod {

std::vector<uint8_t> baseline_bag_detect(const BagOfActionsModel& model,
                                         const Trajectory& x, double threshold) {
  std::vector<uint8_t> out(x.length());
  for (size_t j = 0; j < x.length(); ++j)
    out[j] = model.prob(x.actions[j]) < threshold ? 1 : 0;
  return out;
}

double baseline_bag_fpr(const BagOfActionsModel& model, double threshold) {
  double mass = 0.0;
  for (double p : model.probs())
    if (p < threshold) mass += p;
  return mass;
}

double baseline_bag_threshold_for_fpr(const BagOfActionsModel& model, double alpha) {
  // FPR jumps at each distinct probability value; walk them in ascending
  // order and keep the largest threshold still within alpha.
  std::vector<double> probs = model.probs();
  std::sort(probs.begin(), probs.end());
  double mass = 0.0;
  double best = 0.0;  // below the minimum: nothing flagged
  for (size_t i = 0; i < probs.size();) {
    size_t j = i;
    while (j < probs.size() && probs[j] == probs[i]) ++j;
    // threshold = probs[i] flags exactly the actions with p < probs[i]
    if (mass <= alpha) best = probs[i];
    for (size_t k = i; k < j; ++k) mass += probs[k];
    i = j;
  }
  if (mass <= alpha) best = 1.0;  // everything may be flagged
  return best;
}

std::vector<uint8_t> baseline_hmm_detect(const HmmModel& model, const Trajectory& x,
                                         double threshold) {
  const auto path = model.viterbi(x);
  std::vector<uint8_t> out(x.length());
  for (size_t j = 0; j < x.length(); ++j)
    out[j] =
        model.emit_at(static_cast<size_t>(path[j]), x.actions[j]) < threshold ? 1 : 0;
  return out;
}

namespace {

std::vector<double> null_emission_probs(const HmmModel& model,
                                        const std::vector<size_t>& lengths,
                                        size_t n_reps, uint64_t seed) {
  std::vector<double> probs;
  for (size_t rep = 0; rep < n_reps; ++rep) {
    for (size_t i = 0; i < lengths.size(); ++i) {
      Rng rng(derive_seed(seed, "hmm-baseline-null", rep, i));
      const Trajectory t = model.sample("null", lengths[i], rng);
      const auto path = model.viterbi(t);
      for (size_t j = 0; j < t.length(); ++j)
        probs.push_back(model.emit_at(static_cast<size_t>(path[j]), t.actions[j]));
    }
  }
  return probs;
}

}  // namespace

double baseline_hmm_fpr(const HmmModel& model, double threshold,
                        const std::vector<size_t>& lengths, size_t n_reps,
                        uint64_t seed) {
  const auto probs = null_emission_probs(model, lengths, n_reps, seed);
  if (probs.empty()) return 0.0;
  size_t flagged = 0;
  for (double p : probs) flagged += p < threshold ? 1 : 0;
  return static_cast<double>(flagged) / static_cast<double>(probs.size());
}

double baseline_hmm_threshold_for_fpr(const HmmModel& model, double alpha,
                                      const std::vector<size_t>& lengths,
                                      size_t n_reps, uint64_t seed) {
  auto probs = null_emission_probs(model, lengths, n_reps, seed);
  if (probs.empty()) return 0.0;
  std::sort(probs.begin(), probs.end());
  // Flagging is p < threshold; the k-th smallest value as threshold flags at
  // most k actions on the null sample.
  const auto k = static_cast<size_t>(alpha * static_cast<double>(probs.size()));
  return k >= probs.size() ? probs.back() + 1.0 : probs[k];
}

}  // namespace seqod
