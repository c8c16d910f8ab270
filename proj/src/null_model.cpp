#include "seqod/null_model.hpp"

#include <stdexcept>

namespace seqod {

void NaiveReplacementScorer::scores(size_t j, std::span<const int32_t> candidates,
                                    std::span<double> out) {
  if (j >= scratch_.length())
    throw std::out_of_range("replacement scorer: bad position");
  if (out.size() != candidates.size())
    throw std::invalid_argument("replacement scorer: output size mismatch");
  const int32_t original = scratch_.actions[j];
  for (size_t i = 0; i < candidates.size(); ++i) {
    scratch_.actions[j] = candidates[i];
    out[i] = model_.log_score(scratch_);
  }
  scratch_.actions[j] = original;
}

std::unique_ptr<ReplacementScorer> NullModel::make_replacement_scorer(
    const Trajectory& x) const {
  return std::make_unique<NaiveReplacementScorer>(*this, x);
}

void NullModel::replacement_log_scores(const Trajectory& x, size_t j,
                                       std::span<const int32_t> candidates,
                                       std::span<double> out) const {
  make_replacement_scorer(x)->scores(j, candidates, out);
}

}  // namespace seqod
