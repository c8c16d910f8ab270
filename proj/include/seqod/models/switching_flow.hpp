#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqod/null_model.hpp"

namespace seqod {

// Personalized switching-Markov sequence model: M environments, each a
// Markov chain over actions; Bernoulli(q) jump candidates; per-environment
// jump probabilities rho; per-user environment preference. On a jump the
// next action is uniform (1/N), otherwise it follows the environment's
// transition row.

struct SwitchingFlowPriors {
  double a = 0.1;  // symmetric Dirichlet concentration for transition rows
  double r = 1.0;  // Beta(r, s) for each rho
  double s = 1.0;
};

struct SwitchingFlowOptions {
  size_t n_envs = 10;
  double q = 0.1;
  std::vector<double> q_grid;  // nonempty: pick q by held-out likelihood
  SwitchingFlowPriors priors;
  size_t burn_in = 200;
  size_t n_retained = 200;
  uint64_t seed = 1;
  double holdout_fraction = 0.2;  // only used for the q grid search
  bool collect_segmentation = false;
  // Start the chain from an HMM segmentation (Viterbi states as environments,
  // state changes as jumps). The plain prior init can get trapped in the
  // mode where a single environment absorbs everything; a segmentation-aware
  // start lands near the switching structure, which is sticky once reached.
  bool hmm_init = true;
};

// Per-trajectory latent chains. C_0 = J_0 = 1 always; J_t = 1 implies
// C_t = 1; C_t = 0 implies J_t = 0 and Z_t = Z_{t-1}.
struct SwitchingFlowLatents {
  std::vector<uint8_t> candidates;  // C
  std::vector<uint8_t> jumps;       // J
  std::vector<int32_t> envs;        // Z
};

class SwitchingFlowModel : public NullModel {
 public:
  struct FitReport {
    double chosen_q = 0.0;
    std::vector<double> grid_holdout_ll;              // per grid value, mean per-action
    std::vector<std::vector<int32_t>> segmentation;   // per trajectory, majority env
    double mean_jump_rate = 0.0;                      // over retained sweeps
  };

  // Transition point estimate: for each environment and each source action
  // observed in training, a uniform floor plus sparse per-destination excess
  // (rows sum to 1); unobserved sources fall back to the uniform row.
  struct TransEstimate {
    std::unordered_map<int32_t, size_t> src_row;
    std::vector<size_t> row_offset;  // rows + 1
    std::vector<int32_t> dst;        // sorted within each row
    std::vector<double> floor;       // n_envs * rows
    std::vector<double> excess;      // n_envs * dst.size()
  };

  SwitchingFlowModel(std::shared_ptr<const Vocabulary> vocab, size_t n_envs, double q,
                     SwitchingFlowPriors priors, std::vector<double> rho,
                     std::unordered_map<std::string, std::vector<double>> pref,
                     TransEstimate trans);

  static std::unique_ptr<SwitchingFlowModel> fit(const Corpus& corpus,
                                                 const SwitchingFlowOptions& opt,
                                                 FitReport* report = nullptr);

  std::string kind() const override { return "switchingflow"; }
  const Vocabulary& vocabulary() const override { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocabulary() const override { return vocab_; }

  double log_score(const Trajectory& x) const override;
  Trajectory sample(const std::string& user, size_t length, Rng& rng) const override;
  Trajectory sample_with_latents(const std::string& user, size_t length, Rng& rng,
                                 SwitchingFlowLatents* latents) const;
  std::unique_ptr<ReplacementScorer> make_replacement_scorer(
      const Trajectory& x) const override;

  size_t n_envs() const { return m_; }
  double q() const { return q_; }
  const std::vector<double>& rho() const { return rho_; }
  double trans_prob(size_t env, int32_t src, int32_t dst) const;
  // Unknown users score with a uniform preference.
  const std::vector<double>& preference(const std::string& user) const;

  nlohmann::json to_json() const override;
  static std::unique_ptr<SwitchingFlowModel> from_json(
      const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab);

 private:
  friend class SwitchingFlowScorer;

  std::shared_ptr<const Vocabulary> vocab_;
  size_t m_;
  double q_;
  SwitchingFlowPriors priors_;
  std::vector<double> rho_;
  std::unordered_map<std::string, std::vector<double>> pref_;
  std::vector<double> uniform_pref_;
  TransEstimate trans_;
};

// Table 1 entry: P(C_t = 1 | J_t = 0, Z_{t-1} has jump prob rho).
inline double candidate_on_prob(double q, double rho) {
  return (q - q * rho) / (1.0 - q * rho);
}

// The Gibbs sampler over (C, J, Z, A, rho, P_u). Block updates are public so
// each conditional can be tested in isolation; sweep() runs them in order.
// The transition draw is materialized only at source->destination pairs that
// occur in the data (the only entries any conditional evaluates); the
// remaining Dirichlet mass of each row is drawn as a single aggregate gamma.
class SwitchingFlowSampler {
 public:
  SwitchingFlowSampler(const Corpus& corpus, size_t n_envs, double q,
                       SwitchingFlowPriors priors);

  void init_from_prior(Rng& rng);

  void sample_candidates(Rng& rng);        // C | J, Z
  void sample_jumps_envs(Rng& rng);        // (J, Z) | C  via FFBS
  void sample_transition_tensor(Rng& rng); // A | J, Z, x
  void sample_rho(Rng& rng);
  void sample_pref(Rng& rng);
  void sweep(Rng& rng);

  size_t n_trajectories() const { return latents_.size(); }
  const SwitchingFlowLatents& latents(size_t traj) const { return latents_[traj]; }
  void set_latents(size_t traj, SwitchingFlowLatents l);
  const std::vector<double>& rho() const { return rho_; }
  void set_rho(std::vector<double> rho) { rho_ = std::move(rho); }
  const std::vector<double>& pref(size_t user_idx) const { return pref_[user_idx]; }
  void set_pref(size_t user_idx, std::vector<double> p);
  size_t user_index(const std::string& user) const;
  const std::string& user_name(size_t u) const { return users_[u]; }
  size_t n_users() const { return users_.size(); }

  // The pair structure (src_row/row_offset/dst) with empty parameter arrays;
  // model fitting fills floor/excess from the sweep averages.
  SwitchingFlowModel::TransEstimate export_csr() const;

  // Current A draw at an observed pair; throws if (src, dst) never occurs.
  double trans_draw(size_t env, int32_t src, int32_t dst) const;
  // Overwrite the pair-draw table from a dense tensor (tests).
  void set_trans_draw_dense(const std::vector<double>& dense);  // M * N * N

  double jump_rate() const;  // fraction of J_t = 1 over all steps

  // FFBS over one trajectory given its current C; exposed for the
  // frequency-vs-enumeration tests.
  void ffbs_trajectory(size_t traj, Rng& rng);

  // Posterior-mean transition row accumulation support.
  struct SweepCounts {
    std::vector<double> pair_count;  // M * P
    std::vector<double> row_total;   // M * R
  };
  SweepCounts transition_counts() const;

  const std::vector<size_t>& pair_index_of_traj(size_t traj) const {
    return traj_pairs_[traj];
  }

 private:
  friend class SwitchingFlowModel;

  void count_transitions(std::vector<double>& pair_count,
                         std::vector<double>& row_total) const;
  void draw_transitions_impl(const std::vector<double>& pair_count, Rng& rng);

  const Corpus* corpus_;
  size_t m_;
  double q_;
  SwitchingFlowPriors priors_;
  size_t n_;  // vocabulary size

  // CSR over observed source -> destination pairs.
  std::unordered_map<int32_t, size_t> src_row_;
  std::vector<int32_t> row_src_;
  std::vector<size_t> row_offset_;
  std::vector<int32_t> pair_dst_;
  std::unordered_map<int64_t, size_t> pair_of_;
  std::vector<std::vector<size_t>> traj_pairs_;  // per traj, pair idx at t>=1

  std::vector<std::string> users_;
  std::unordered_map<std::string, size_t> user_of_;
  std::vector<size_t> traj_user_;

  std::vector<SwitchingFlowLatents> latents_;
  std::vector<double> rho_;
  std::vector<std::vector<double>> pref_;
  std::vector<double> a_draw_;  // M * P, normalized row values at observed pairs
};

}  // namespace seqod
