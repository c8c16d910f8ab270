#pragma once

#include <memory>
#include <span>
#include <string>

#include "json.hpp"
#include "seqod/corpus.hpp"
#include "seqod/rng.hpp"

namespace seqod {

// Scores every single-position replacement of one trajectory. Created once
// per trajectory so models can cache their forward/backward passes across
// positions; candidate evaluation is then O(states) instead of a full
// rescore.
class ReplacementScorer {
 public:
  virtual ~ReplacementScorer() = default;

  // out[i] = log-probability of x with position j replaced by candidates[i].
  virtual void scores(size_t j, std::span<const int32_t> candidates,
                      std::span<double> out) = 0;
};

// A generative model of normal behavior. log_score must be deterministic
// given the fitted parameters; fitted models are immutable and scoring is
// concurrently callable.
class NullModel {
 public:
  virtual ~NullModel() = default;

  virtual std::string kind() const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual std::shared_ptr<const Vocabulary> shared_vocabulary() const = 0;

  // Log-probability of the full sequence under the model (the trajectory's
  // user selects the personalization, if any).
  virtual double log_score(const Trajectory& x) const = 0;

  virtual Trajectory sample(const std::string& user, size_t length, Rng& rng) const = 0;

  // Default: mutate-and-rescore, O(cost(log_score)) per candidate. Stays as
  // the reference path the model-specific scorers are tested against.
  virtual std::unique_ptr<ReplacementScorer> make_replacement_scorer(
      const Trajectory& x) const;

  // Convenience wrapper over make_replacement_scorer for one position.
  void replacement_log_scores(const Trajectory& x, size_t j,
                              std::span<const int32_t> candidates,
                              std::span<double> out) const;

  virtual nlohmann::json to_json() const = 0;
};

// The mutate-and-rescore fallback, public so tests can compare any model's
// fast scorer against it.
class NaiveReplacementScorer : public ReplacementScorer {
 public:
  NaiveReplacementScorer(const NullModel& model, const Trajectory& x)
      : model_(model), scratch_(x) {}

  void scores(size_t j, std::span<const int32_t> candidates,
              std::span<double> out) override;

 private:
  const NullModel& model_;
  Trajectory scratch_;
};

}  // namespace seqod
