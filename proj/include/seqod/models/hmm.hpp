#pragma once

#include <memory>
#include <vector>

#include "seqod/null_model.hpp"

namespace seqod {

// Discrete-emission hidden Markov model, fit by Baum-Welch over the pooled
// corpus. Rows of trans/emit and pi are distributions; scoring uses the
// scaled forward recursion.
class HmmModel : public NullModel {
 public:
  struct FitOptions {
    size_t n_states = 10;
    size_t max_iters = 100;
    uint64_t seed = 1;
    double pseudocount = 1.0;   // Dirichlet-style additive regularization
    int restarts = 5;
    double tol = 1e-6;          // relative objective improvement
    double holdout_fraction = 0.1;  // restart selection; 0 = select on train
  };

  struct FitReport {
    std::vector<double> objective_path;  // winning restart, final refit
    double train_log_lik = 0.0;
    double holdout_log_lik = 0.0;
    int chosen_restart = -1;
  };

  HmmModel(std::shared_ptr<const Vocabulary> vocab, size_t n_states,
           std::vector<double> pi, std::vector<double> trans,
           std::vector<double> emit);

  static std::unique_ptr<HmmModel> fit(const Corpus& corpus, const FitOptions& opt,
                                       FitReport* report = nullptr);

  std::string kind() const override { return "hmm"; }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocabulary() const override { return vocab_; }

  double log_score(const Trajectory& x) const override;
  Trajectory sample(const std::string& user, size_t length, Rng& rng) const override;
  std::unique_ptr<ReplacementScorer> make_replacement_scorer(
      const Trajectory& x) const override;

  std::vector<int32_t> viterbi(const Trajectory& x) const;

  size_t n_states() const { return k_; }
  const std::vector<double>& pi() const { return pi_; }
  const std::vector<double>& trans() const { return trans_; }  // k x k row-major
  const std::vector<double>& emit() const { return emit_; }    // k x N row-major
  double emit_at(size_t state, int32_t token) const {
    return emit_[state * vocab_->size() + static_cast<size_t>(token)];
  }

  nlohmann::json to_json() const override;
  static std::unique_ptr<HmmModel> from_json(
      const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab);

 private:
  friend class HmmScorer;

  std::shared_ptr<const Vocabulary> vocab_;
  size_t k_;
  std::vector<double> pi_;
  std::vector<double> trans_;
  std::vector<double> emit_;
};

// One Baum-Welch pass over a corpus; returns the data log-likelihood under
// the *input* parameters and overwrites them with the re-estimated ones.
// Exposed for the monotonicity tests.
double hmm_em_step(const Corpus& corpus, size_t k, std::vector<double>& pi,
                   std::vector<double>& trans, std::vector<double>& emit,
                   double pseudocount);

}  // namespace seqod
