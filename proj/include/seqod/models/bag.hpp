#pragma once

#include <memory>
#include <vector>

#include "seqod/null_model.hpp"

namespace seqod {

// i.i.d. action model: log P(x) = sum_t log p(x_t), p Laplace-smoothed.
class BagOfActionsModel : public NullModel {
 public:
  BagOfActionsModel(std::shared_ptr<const Vocabulary> vocab, double epsilon);

  static std::unique_ptr<BagOfActionsModel> fit(const Corpus& corpus, double epsilon = 1.0);

  std::string kind() const override { return "bag"; }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocabulary() const override { return vocab_; }

  double log_score(const Trajectory& x) const override;
  Trajectory sample(const std::string& user, size_t length, Rng& rng) const override;
  std::unique_ptr<ReplacementScorer> make_replacement_scorer(
      const Trajectory& x) const override;

  const std::vector<double>& probs() const { return probs_; }
  double prob(int32_t a) const { return probs_[static_cast<size_t>(a)]; }

  nlohmann::json to_json() const override;
  static std::unique_ptr<BagOfActionsModel> from_json(
      const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab);

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  double epsilon_;
  std::vector<double> probs_;
  std::vector<double> log_probs_;
};

}  // namespace seqod
