#pragma once

#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "seqod/null_model.hpp"

namespace seqod {

// Fixed-order Markov language model over action ids with additive smoothing.
// Contexts shorter than the order are used at the start of a sequence, so
// every position is conditioned on min(order, position) previous actions.
class NgramModel : public NullModel {
 public:
  struct CtxStats {
    int64_t total = 0;
    std::unordered_map<int32_t, int64_t> counts;
  };

  NgramModel(std::shared_ptr<const Vocabulary> vocab, int order, double epsilon);

  static std::unique_ptr<NgramModel> fit(const Corpus& corpus, int order,
                                         double epsilon = 1.0);

  std::string kind() const override { return "ngram"; }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocabulary() const override { return vocab_; }

  double log_score(const Trajectory& x) const override;
  Trajectory sample(const std::string& user, size_t length, Rng& rng) const override;
  std::unique_ptr<ReplacementScorer> make_replacement_scorer(
      const Trajectory& x) const override;

  int order() const { return order_; }
  double epsilon() const { return epsilon_; }

  // P(a | ctx) with additive smoothing; unseen contexts give 1/N.
  double cond_prob(std::span<const int32_t> ctx, int32_t a) const;
  double log_cond(std::span<const int32_t> ctx, int32_t a) const;

  void observe(std::span<const int32_t> actions);  // fit-time only

  nlohmann::json to_json() const override;
  static std::unique_ptr<NgramModel> from_json(
      const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab);

 private:
  struct CtxHash {
    size_t operator()(const std::vector<int32_t>& v) const {
      uint64_t h = 0xcbf29ce484222325ULL;
      for (int32_t x : v) {
        h ^= static_cast<uint64_t>(static_cast<uint32_t>(x)) + 1;
        h *= 0x100000001b3ULL;
      }
      return static_cast<size_t>(h);
    }
  };

  const CtxStats* lookup(std::span<const int32_t> ctx) const;

  std::shared_ptr<const Vocabulary> vocab_;
  int order_;
  double epsilon_;
  std::unordered_map<std::vector<int32_t>, CtxStats, CtxHash> table_;
};

}  // namespace seqod
