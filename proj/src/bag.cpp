#include "seqod/models/bag.hpp"

#include <cmath>
#include <stdexcept>

namespace seqod {

BagOfActionsModel::BagOfActionsModel(std::shared_ptr<const Vocabulary> vocab,
                                     double epsilon)
    : vocab_(std::move(vocab)), epsilon_(epsilon) {
  if (epsilon_ <= 0.0) throw std::invalid_argument("bag: epsilon must be positive");
  const size_t n = vocab_->size();
  const double denom =
      static_cast<double>(n) * epsilon_ + static_cast<double>(vocab_->total_count());
  probs_.resize(n);
  log_probs_.resize(n);
  for (size_t a = 0; a < n; ++a) {
    probs_[a] =
        (epsilon_ + static_cast<double>(vocab_->count(static_cast<int32_t>(a)))) / denom;
    log_probs_[a] = std::log(probs_[a]);
  }
}

std::unique_ptr<BagOfActionsModel> BagOfActionsModel::fit(const Corpus& corpus,
                                                          double epsilon) {
  if (corpus.trajectories.empty()) throw std::invalid_argument("bag: empty corpus");
  return std::make_unique<BagOfActionsModel>(corpus.vocab, epsilon);
}

double BagOfActionsModel::log_score(const Trajectory& x) const {
  double s = 0.0;
  for (int32_t a : x.actions) s += log_probs_[static_cast<size_t>(a)];
  return s;
}

Trajectory BagOfActionsModel::sample(const std::string& user, size_t length,
                                     Rng& rng) const {
  Trajectory t;
  t.user = user;
  t.actions.reserve(length);
  for (size_t i = 0; i < length; ++i)
    t.actions.push_back(static_cast<int32_t>(rng.categorical(probs_)));
  return t;
}

namespace {

class BagScorer : public ReplacementScorer {
 public:
  BagScorer(const Trajectory& x, const std::vector<double>& log_probs, double total)
      : x_(x), log_probs_(log_probs), total_(total) {}

  void scores(size_t j, std::span<const int32_t> candidates,
              std::span<double> out) override {
    if (j >= x_.length()) throw std::out_of_range("bag: bad position");
    const double rest = total_ - log_probs_[static_cast<size_t>(x_.actions[j])];
    for (size_t i = 0; i < candidates.size(); ++i)
      out[i] = rest + log_probs_[static_cast<size_t>(candidates[i])];
  }

 private:
  const Trajectory& x_;
  const std::vector<double>& log_probs_;
  double total_;
};

}  // namespace

std::unique_ptr<ReplacementScorer> BagOfActionsModel::make_replacement_scorer(
    const Trajectory& x) const {
  return std::make_unique<BagScorer>(x, log_probs_, log_score(x));
}

nlohmann::json BagOfActionsModel::to_json() const {
  return {{"epsilon", epsilon_}};
}

std::unique_ptr<BagOfActionsModel> BagOfActionsModel::from_json(
    const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab) {
  return std::make_unique<BagOfActionsModel>(std::move(vocab),
                                             j.at("epsilon").get<double>());
}

}  // namespace seqod
