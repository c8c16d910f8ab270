#include "seqod/models/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace seqod {

NgramModel::NgramModel(std::shared_ptr<const Vocabulary> vocab, int order,
                       double epsilon)
    : vocab_(std::move(vocab)), order_(order), epsilon_(epsilon) {
  if (order_ < 1)
    throw std::invalid_argument("ngram: order must be >= 1 (use the bag model for order 0)");
  if (epsilon_ <= 0.0) throw std::invalid_argument("ngram: epsilon must be positive");
}

std::unique_ptr<NgramModel> NgramModel::fit(const Corpus& corpus, int order,
                                            double epsilon) {
  if (corpus.trajectories.empty()) throw std::invalid_argument("ngram: empty corpus");
  auto m = std::make_unique<NgramModel>(corpus.vocab, order, epsilon);
  for (const auto& t : corpus.trajectories) m->observe(t.actions);
  return m;
}

void NgramModel::observe(std::span<const int32_t> actions) {
  std::vector<int32_t> key;
  key.reserve(static_cast<size_t>(order_));
  for (size_t t = 0; t < actions.size(); ++t) {
    const size_t ctx_len = std::min<size_t>(static_cast<size_t>(order_), t);
    key.assign(actions.begin() + static_cast<ptrdiff_t>(t - ctx_len),
               actions.begin() + static_cast<ptrdiff_t>(t));
    auto& stats = table_[key];
    ++stats.total;
    ++stats.counts[actions[t]];
  }
}

const NgramModel::CtxStats* NgramModel::lookup(std::span<const int32_t> ctx) const {
  thread_local std::vector<int32_t> key;
  key.assign(ctx.begin(), ctx.end());
  auto it = table_.find(key);
  return it == table_.end() ? nullptr : &it->second;
}

double NgramModel::cond_prob(std::span<const int32_t> ctx, int32_t a) const {
  const double n = static_cast<double>(vocab_->size());
  const CtxStats* s = lookup(ctx);
  if (!s) return 1.0 / n;
  int64_t c = 0;
  if (auto it = s->counts.find(a); it != s->counts.end()) c = it->second;
  return (epsilon_ + static_cast<double>(c)) /
         (n * epsilon_ + static_cast<double>(s->total));
}

double NgramModel::log_cond(std::span<const int32_t> ctx, int32_t a) const {
  return std::log(cond_prob(ctx, a));
}

double NgramModel::log_score(const Trajectory& x) const {
  double s = 0.0;
  const auto& a = x.actions;
  for (size_t t = 0; t < a.size(); ++t) {
    const size_t ctx_len = std::min<size_t>(static_cast<size_t>(order_), t);
    s += log_cond({a.data() + (t - ctx_len), ctx_len}, a[t]);
  }
  return s;
}

Trajectory NgramModel::sample(const std::string& user, size_t length, Rng& rng) const {
  Trajectory t;
  t.user = user;
  t.actions.reserve(length);
  const size_t n = vocab_->size();
  const double n_eps = static_cast<double>(n) * epsilon_;
  for (size_t i = 0; i < length; ++i) {
    const size_t ctx_len = std::min<size_t>(static_cast<size_t>(order_), i);
    const CtxStats* s = lookup({t.actions.data() + (i - ctx_len), ctx_len});
    int32_t next;
    const double total = s ? static_cast<double>(s->total) : 0.0;
    // Smoothed categorical = mixture of the uniform floor and the counts.
    if (total == 0.0 || rng.uniform() < n_eps / (n_eps + total)) {
      next = static_cast<int32_t>(rng.below(n));
    } else {
      double u = rng.uniform() * total;
      next = -1;
      for (const auto& [dst, c] : s->counts) {
        u -= static_cast<double>(c);
        if (u < 0.0) {
          next = dst;
          break;
        }
      }
      if (next < 0) next = s->counts.begin()->first;
    }
    t.actions.push_back(next);
  }
  return t;
}

namespace {

// Replacing position j only changes the conditionals at t in [j, j+order]:
// the target term itself and every term whose context window covers j.
class NgramScorer : public ReplacementScorer {
 public:
  NgramScorer(const NgramModel& model, const Trajectory& x)
      : model_(model), scratch_(x.actions.begin(), x.actions.end()), base_(model.log_score(x)) {}

  void scores(size_t j, std::span<const int32_t> candidates,
              std::span<double> out) override {
    const size_t T = scratch_.size();
    if (j >= T) throw std::out_of_range("ngram: bad position");
    const size_t b = static_cast<size_t>(model_.order());
    const size_t win_end = std::min(T, j + b + 1);

    const int32_t original = scratch_[j];
    const double base_window = window_sum(j, win_end);
    for (size_t i = 0; i < candidates.size(); ++i) {
      scratch_[j] = candidates[i];
      out[i] = base_ - base_window + window_sum(j, win_end);
    }
    scratch_[j] = original;
  }

 private:
  double window_sum(size_t from, size_t to) const {
    const size_t b = static_cast<size_t>(model_.order());
    double w = 0.0;
    for (size_t t = from; t < to; ++t) {
      const size_t ctx_len = std::min(b, t);
      w += model_.log_cond({scratch_.data() + (t - ctx_len), ctx_len}, scratch_[t]);
    }
    return w;
  }

  const NgramModel& model_;
  std::vector<int32_t> scratch_;
  double base_;
};

}  // namespace

std::unique_ptr<ReplacementScorer> NgramModel::make_replacement_scorer(
    const Trajectory& x) const {
  return std::make_unique<NgramScorer>(*this, x);
}

nlohmann::json NgramModel::to_json() const {
  // Canonical ordering so equal models serialize to equal bytes (the
  // calibration record's model hash relies on this).
  std::vector<const std::vector<int32_t>*> keys;
  keys.reserve(table_.size());
  for (const auto& [ctx, stats] : table_) keys.push_back(&ctx);
  std::sort(keys.begin(), keys.end(),
            [](const auto* a, const auto* b) { return *a < *b; });

  nlohmann::json contexts = nlohmann::json::array();
  for (const auto* ctx : keys) {
    const auto& stats = table_.at(*ctx);
    std::vector<std::pair<int32_t, int64_t>> entries(stats.counts.begin(),
                                                     stats.counts.end());
    std::sort(entries.begin(), entries.end());
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& [dst, c] : entries) counts.push_back({dst, c});
    contexts.push_back({{"ctx", *ctx}, {"n", stats.total}, {"counts", counts}});
  }
  return {{"order", order_}, {"epsilon", epsilon_}, {"contexts", contexts}};
}

std::unique_ptr<NgramModel> NgramModel::from_json(
    const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab) {
  auto m = std::make_unique<NgramModel>(std::move(vocab), j.at("order").get<int>(),
                                        j.at("epsilon").get<double>());
  for (const auto& entry : j.at("contexts")) {
    auto ctx = entry.at("ctx").get<std::vector<int32_t>>();
    auto& stats = m->table_[ctx];
    stats.total = entry.at("n").get<int64_t>();
    for (const auto& pair : entry.at("counts"))
      stats.counts[pair.at(0).get<int32_t>()] = pair.at(1).get<int64_t>();
  }
  return m;
}

}  // namespace seqod
