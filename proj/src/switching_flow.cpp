#include "seqod/models/switching_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "seqod/kernels.hpp"
#include "seqod/models/hmm.hpp"

namespace seqod {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

inline int64_t pair_key(int32_t src, int32_t dst, size_t n) {
  return static_cast<int64_t>(src) * static_cast<int64_t>(n) + dst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Sampler
// ---------------------------------------------------------------------------

SwitchingFlowSampler::SwitchingFlowSampler(const Corpus& corpus, size_t n_envs,
                                           double q, SwitchingFlowPriors priors)
    : corpus_(&corpus), m_(n_envs), q_(q), priors_(priors), n_(corpus.vocab->size()) {
  if (m_ < 1) throw std::invalid_argument("switchingflow: n_envs must be >= 1");
  if (!(q_ > 0.0) || q_ > 1.0)
    throw std::invalid_argument("switchingflow: q must be in (0, 1]");
  if (corpus.trajectories.empty())
    throw std::invalid_argument("switchingflow: empty corpus");

  // Observed source -> destination pairs, CSR with sorted rows.
  std::map<int32_t, std::set<int32_t>> adj;
  for (const auto& t : corpus.trajectories)
    for (size_t i = 1; i < t.actions.size(); ++i)
      adj[t.actions[i - 1]].insert(t.actions[i]);
  row_offset_.push_back(0);
  for (const auto& [src, dsts] : adj) {
    src_row_[src] = row_src_.size();
    row_src_.push_back(src);
    for (int32_t dst : dsts) {
      pair_of_[pair_key(src, dst, n_)] = pair_dst_.size();
      pair_dst_.push_back(dst);
    }
    row_offset_.push_back(pair_dst_.size());
  }

  traj_pairs_.resize(corpus.trajectories.size());
  latents_.resize(corpus.trajectories.size());
  for (size_t i = 0; i < corpus.trajectories.size(); ++i) {
    const auto& x = corpus.trajectories[i].actions;
    if (x.empty()) throw std::invalid_argument("switchingflow: empty trajectory");
    traj_pairs_[i].reserve(x.size() > 0 ? x.size() - 1 : 0);
    for (size_t t = 1; t < x.size(); ++t)
      traj_pairs_[i].push_back(pair_of_.at(pair_key(x[t - 1], x[t], n_)));
    const auto& user = corpus.trajectories[i].user;
    auto [it, inserted] = user_of_.try_emplace(user, users_.size());
    if (inserted) users_.push_back(user);
    traj_user_.push_back(it->second);
  }

  rho_.assign(m_, 0.5);
  pref_.assign(users_.size(), std::vector<double>(m_, 1.0 / static_cast<double>(m_)));
  a_draw_.assign(m_ * pair_dst_.size(), 1.0 / static_cast<double>(n_));
}

size_t SwitchingFlowSampler::user_index(const std::string& user) const {
  return user_of_.at(user);
}

void SwitchingFlowSampler::set_latents(size_t traj, SwitchingFlowLatents l) {
  const size_t T = corpus_->trajectories[traj].actions.size();
  if (l.candidates.size() != T || l.jumps.size() != T || l.envs.size() != T)
    throw std::invalid_argument("switchingflow: latent length mismatch");
  latents_[traj] = std::move(l);
}

void SwitchingFlowSampler::set_pref(size_t user_idx, std::vector<double> p) {
  if (p.size() != m_) throw std::invalid_argument("switchingflow: pref size mismatch");
  pref_[user_idx] = std::move(p);
}

double SwitchingFlowSampler::trans_draw(size_t env, int32_t src, int32_t dst) const {
  return a_draw_[env * pair_dst_.size() + pair_of_.at(pair_key(src, dst, n_))];
}

void SwitchingFlowSampler::set_trans_draw_dense(const std::vector<double>& dense) {
  if (dense.size() != m_ * n_ * n_)
    throw std::invalid_argument("switchingflow: dense tensor size mismatch");
  const size_t p = pair_dst_.size();
  for (size_t r = 0; r + 1 < row_offset_.size(); ++r) {
    const auto src = static_cast<size_t>(row_src_[r]);
    for (size_t i = row_offset_[r]; i < row_offset_[r + 1]; ++i) {
      const auto dst = static_cast<size_t>(pair_dst_[i]);
      for (size_t z = 0; z < m_; ++z)
        a_draw_[z * p + i] = dense[(z * n_ + src) * n_ + dst];
    }
  }
}

void SwitchingFlowSampler::init_from_prior(Rng& rng) {
  for (size_t z = 0; z < m_; ++z) rho_[z] = rng.beta(priors_.r, priors_.s);
  const std::vector<double> ones(m_, 1.0);
  for (auto& p : pref_) p = rng.dirichlet(ones);

  std::vector<double> zero_pairs(m_ * pair_dst_.size(), 0.0);
  draw_transitions_impl(zero_pairs, rng);

  for (size_t i = 0; i < latents_.size(); ++i) {
    const size_t T = corpus_->trajectories[i].actions.size();
    SwitchingFlowLatents l;
    l.candidates.assign(T, 0);
    l.jumps.assign(T, 0);
    l.envs.assign(T, 0);
    const auto& pu = pref_[traj_user_[i]];
    l.candidates[0] = 1;
    l.jumps[0] = 1;
    l.envs[0] = static_cast<int32_t>(rng.categorical(pu));
    for (size_t t = 1; t < T; ++t) {
      l.candidates[t] = rng.bernoulli(q_) ? 1 : 0;
      if (l.candidates[t] &&
          rng.bernoulli(rho_[static_cast<size_t>(l.envs[t - 1])])) {
        l.jumps[t] = 1;
        l.envs[t] = static_cast<int32_t>(rng.categorical(pu));
      } else {
        l.jumps[t] = 0;
        l.envs[t] = l.envs[t - 1];
      }
    }
    latents_[i] = std::move(l);
  }
}

void SwitchingFlowSampler::sample_candidates(Rng& rng) {
  for (auto& l : latents_) {
    l.candidates[0] = 1;
    for (size_t t = 1; t < l.candidates.size(); ++t) {
      if (l.jumps[t]) {
        l.candidates[t] = 1;
        continue;
      }
      const double rho = rho_[static_cast<size_t>(l.envs[t - 1])];
      const double denom = 1.0 - q_ * rho;
      const double p_on = denom > 0.0 ? (q_ - q_ * rho) / denom : 1.0;
      l.candidates[t] = rng.bernoulli(p_on) ? 1 : 0;
    }
  }
}

void SwitchingFlowSampler::ffbs_trajectory(size_t traj, Rng& rng) {
  auto& l = latents_[traj];
  const auto& pairs = traj_pairs_[traj];
  const size_t T = l.candidates.size();
  const size_t P = pair_dst_.size();
  const double log_n = std::log(static_cast<double>(n_));

  std::vector<size_t> ts;  // candidate times
  l.candidates[0] = 1;
  for (size_t t = 0; t < T; ++t)
    if (l.candidates[t]) ts.push_back(t);
  const size_t tc = ts.size();

  // Per block and environment: within-block log-likelihood, and the log
  // transition into the block's first action (stay case only).
  std::vector<double> w(tc * m_, 0.0), e(tc * m_, 0.0);
  for (size_t i = 0; i < tc; ++i) {
    const size_t t_begin = ts[i];
    const size_t t_end = (i + 1 < tc) ? ts[i + 1] : T;  // exclusive
    for (size_t z = 0; z < m_; ++z) {
      double acc = 0.0;
      for (size_t t = t_begin + 1; t < t_end; ++t)
        acc += std::log(a_draw_[z * P + pairs[t - 1]]);
      w[i * m_ + z] = acc;
      if (i > 0) e[i * m_ + z] = std::log(a_draw_[z * P + pairs[t_begin - 1]]);
    }
  }

  const auto& pu = pref_[traj_user_[traj]];
  std::vector<double> lpu(m_), lrho(m_), l1mrho(m_);
  for (size_t z = 0; z < m_; ++z) {
    lpu[z] = pu[z] > 0.0 ? std::log(pu[z]) : kNegInf;
    lrho[z] = rho_[z] > 0.0 ? std::log(rho_[z]) : kNegInf;
    l1mrho[z] = rho_[z] < 1.0 ? std::log1p(-rho_[z]) : kNegInf;
  }

  // Forward: la[i] holds the normalized log alpha slice, j=0 lane first.
  std::vector<double> la(tc * 2 * m_, kNegInf);
  for (size_t z = 0; z < m_; ++z)
    la[0 * 2 * m_ + m_ + z] = lpu[z] - log_n + w[z];  // j=1 lane; J_1 is forced
  {
    double* slice = la.data();
    const double norm = kernels::log_sum_exp(slice, 2 * m_);
    if (norm == kNegInf) throw std::runtime_error("switchingflow: zero likelihood");
    for (size_t k = 0; k < 2 * m_; ++k) slice[k] -= norm;
  }
  std::vector<double> jump_terms(2 * m_);
  for (size_t i = 1; i < tc; ++i) {
    const double* prev = la.data() + (i - 1) * 2 * m_;
    double* cur = la.data() + i * 2 * m_;
    for (size_t z = 0; z < m_; ++z) {
      jump_terms[z] = prev[z] + lrho[z];
      jump_terms[m_ + z] = prev[m_ + z] + lrho[z];
    }
    const double s_jump = kernels::log_sum_exp(jump_terms.data(), 2 * m_);
    for (size_t z = 0; z < m_; ++z) {
      cur[z] = log_add(prev[z], prev[m_ + z]) + l1mrho[z] + e[i * m_ + z] + w[i * m_ + z];
      cur[m_ + z] = s_jump + lpu[z] - log_n + w[i * m_ + z];
    }
    const double norm = kernels::log_sum_exp(cur, 2 * m_);
    if (norm == kNegInf) throw std::runtime_error("switchingflow: zero likelihood");
    for (size_t k = 0; k < 2 * m_; ++k) cur[k] -= norm;
  }

  // Backward sampling.
  std::vector<uint8_t> j_samp(tc);
  std::vector<int32_t> z_samp(tc);
  std::vector<double> weights(2 * m_);
  {
    const double* slice = la.data() + (tc - 1) * 2 * m_;
    for (size_t k = 0; k < 2 * m_; ++k) weights[k] = std::exp(slice[k]);
    const size_t pick = rng.categorical(weights);
    j_samp[tc - 1] = pick >= m_ ? 1 : 0;
    z_samp[tc - 1] = static_cast<int32_t>(pick % m_);
  }
  for (size_t i = tc - 1; i-- > 0;) {
    const double* slice = la.data() + i * 2 * m_;
    if (j_samp[i + 1]) {
      // Next candidate jumped: its destination is environment-independent,
      // only rho of the current environment matters.
      for (size_t z = 0; z < m_; ++z) {
        weights[z] = std::exp(slice[z]) * rho_[z];
        weights[m_ + z] = std::exp(slice[m_ + z]) * rho_[z];
      }
      const size_t pick = rng.categorical(weights);
      j_samp[i] = pick >= m_ ? 1 : 0;
      z_samp[i] = static_cast<int32_t>(pick % m_);
    } else {
      const auto zm = static_cast<size_t>(z_samp[i + 1]);
      double w0 = std::exp(slice[zm]) * (1.0 - rho_[zm]);
      double w1 = std::exp(slice[m_ + zm]) * (1.0 - rho_[zm]);
      const double tot = w0 + w1;
      if (!(tot > 0.0)) throw std::runtime_error("switchingflow: zero likelihood");
      j_samp[i] = rng.uniform() * tot < w1 ? 1 : 0;
      z_samp[i] = z_samp[i + 1];
    }
  }
  // i = 0 must carry the forced jump; the j=0 lane had zero mass there.

  for (size_t i = 0; i < tc; ++i) {
    const size_t t_begin = ts[i];
    const size_t t_end = (i + 1 < tc) ? ts[i + 1] : T;
    l.jumps[t_begin] = j_samp[i];
    l.envs[t_begin] = z_samp[i];
    for (size_t t = t_begin + 1; t < t_end; ++t) {
      l.jumps[t] = 0;
      l.envs[t] = z_samp[i];
    }
  }
  l.jumps[0] = 1;
}

void SwitchingFlowSampler::sample_jumps_envs(Rng& rng) {
  for (size_t i = 0; i < latents_.size(); ++i) ffbs_trajectory(i, rng);
}

void SwitchingFlowSampler::count_transitions(std::vector<double>& pair_count,
                                             std::vector<double>& row_total) const {
  const size_t P = pair_dst_.size();
  pair_count.assign(m_ * P, 0.0);
  row_total.assign(m_ * row_src_.size(), 0.0);
  for (size_t i = 0; i < latents_.size(); ++i) {
    const auto& l = latents_[i];
    const auto& x = corpus_->trajectories[i].actions;
    for (size_t t = 1; t < x.size(); ++t) {
      if (l.jumps[t]) continue;  // jump steps emit uniformly, no evidence on A
      const auto z = static_cast<size_t>(l.envs[t]);
      pair_count[z * P + traj_pairs_[i][t - 1]] += 1.0;
      row_total[z * row_src_.size() + src_row_.at(x[t - 1])] += 1.0;
    }
  }
}

void SwitchingFlowSampler::draw_transitions_impl(const std::vector<double>& pair_count,
                                                 Rng& rng) {
  const size_t P = pair_dst_.size();
  const size_t R = row_src_.size();
  const double a = priors_.a;
  const double nn = static_cast<double>(n_);
  for (size_t z = 0; z < m_; ++z) {
    for (size_t r = 0; r < R; ++r) {
      const size_t begin = row_offset_[r], end = row_offset_[r + 1];
      double total = 0.0;
      for (size_t p = begin; p < end; ++p) {
        const double g = rng.gamma(a + pair_count[z * P + p]);
        a_draw_[z * P + p] = g;
        total += g;
      }
      const double rest_shape = (nn - static_cast<double>(end - begin)) * a;
      if (rest_shape > 0.0) total += rng.gamma(rest_shape);
      for (size_t p = begin; p < end; ++p) a_draw_[z * P + p] /= total;
    }
  }
}

void SwitchingFlowSampler::sample_transition_tensor(Rng& rng) {
  std::vector<double> pair_count, row_total;
  count_transitions(pair_count, row_total);
  draw_transitions_impl(pair_count, rng);
}

void SwitchingFlowSampler::sample_rho(Rng& rng) {
  std::vector<double> suc(m_, 0.0), fail(m_, 0.0);
  for (const auto& l : latents_) {
    for (size_t t = 1; t < l.candidates.size(); ++t) {
      if (!l.candidates[t]) continue;
      const auto m = static_cast<size_t>(l.envs[t - 1]);
      (l.jumps[t] ? suc[m] : fail[m]) += 1.0;
    }
  }
  for (size_t z = 0; z < m_; ++z)
    rho_[z] = rng.beta(priors_.r + suc[z], priors_.s + fail[z]);
}

void SwitchingFlowSampler::sample_pref(Rng& rng) {
  std::vector<std::vector<double>> counts(users_.size(), std::vector<double>(m_, 1.0));
  for (size_t i = 0; i < latents_.size(); ++i) {
    const auto& l = latents_[i];
    auto& c = counts[traj_user_[i]];
    for (size_t t = 0; t < l.jumps.size(); ++t)
      if (l.jumps[t]) c[static_cast<size_t>(l.envs[t])] += 1.0;
  }
  for (size_t u = 0; u < users_.size(); ++u) pref_[u] = rng.dirichlet(counts[u]);
}

void SwitchingFlowSampler::sweep(Rng& rng) {
  sample_candidates(rng);
  sample_jumps_envs(rng);
  sample_transition_tensor(rng);
  sample_rho(rng);
  sample_pref(rng);
}

double SwitchingFlowSampler::jump_rate() const {
  size_t jumps = 0, steps = 0;
  for (const auto& l : latents_) {
    steps += l.jumps.size();
    for (uint8_t j : l.jumps) jumps += j;
  }
  return steps == 0 ? 0.0 : static_cast<double>(jumps) / static_cast<double>(steps);
}

SwitchingFlowSampler::SweepCounts SwitchingFlowSampler::transition_counts() const {
  SweepCounts c;
  count_transitions(c.pair_count, c.row_total);
  return c;
}

SwitchingFlowModel::TransEstimate SwitchingFlowSampler::export_csr() const {
  SwitchingFlowModel::TransEstimate t;
  t.src_row = src_row_;
  t.row_offset = row_offset_;
  t.dst = pair_dst_;
  return t;
}

// ---------------------------------------------------------------------------
// Fitted model
// ---------------------------------------------------------------------------

SwitchingFlowModel::SwitchingFlowModel(
    std::shared_ptr<const Vocabulary> vocab, size_t n_envs, double q,
    SwitchingFlowPriors priors, std::vector<double> rho,
    std::unordered_map<std::string, std::vector<double>> pref, TransEstimate trans)
    : vocab_(std::move(vocab)),
      m_(n_envs),
      q_(q),
      priors_(priors),
      rho_(std::move(rho)),
      pref_(std::move(pref)),
      trans_(std::move(trans)) {
  if (m_ < 1) throw std::invalid_argument("switchingflow: n_envs must be >= 1");
  if (!(q_ > 0.0) || q_ > 1.0)
    throw std::invalid_argument("switchingflow: q must be in (0, 1]");
  if (rho_.size() != m_) throw std::invalid_argument("switchingflow: rho size mismatch");
  for (double r : rho_)
    if (!(r > 0.0) || !(r < 1.0))
      throw std::invalid_argument("switchingflow: rho entries must be in (0, 1)");
  uniform_pref_.assign(m_, 1.0 / static_cast<double>(m_));
}

double SwitchingFlowModel::trans_prob(size_t env, int32_t src, int32_t dst) const {
  auto it = trans_.src_row.find(src);
  if (it == trans_.src_row.end()) return 1.0 / static_cast<double>(vocab_->size());
  const size_t row = it->second;
  double v = trans_.floor[env * trans_.src_row.size() + row];
  const auto begin = trans_.dst.begin() + static_cast<ptrdiff_t>(trans_.row_offset[row]);
  const auto end = trans_.dst.begin() + static_cast<ptrdiff_t>(trans_.row_offset[row + 1]);
  auto pos = std::lower_bound(begin, end, dst);
  if (pos != end && *pos == dst)
    v += trans_.excess[env * trans_.dst.size() +
                       static_cast<size_t>(pos - trans_.dst.begin())];
  return v;
}

const std::vector<double>& SwitchingFlowModel::preference(const std::string& user) const {
  auto it = pref_.find(user);
  return it == pref_.end() ? uniform_pref_ : it->second;
}

double SwitchingFlowModel::log_score(const Trajectory& x) const {
  const auto& a = x.actions;
  if (a.empty()) throw std::invalid_argument("switchingflow: empty trajectory");
  const auto& pu = preference(x.user);
  const double inv_n = 1.0 / static_cast<double>(vocab_->size());

  std::vector<double> f(m_), next(m_);
  for (size_t z = 0; z < m_; ++z) f[z] = pu[z] * inv_n;
  double ll = std::log(kernels::reduce_sum(f.data(), m_));
  kernels::scale(f.data(), m_, std::exp(-ll));

  for (size_t t = 1; t < a.size(); ++t) {
    double jump_mass = 0.0;
    for (size_t z = 0; z < m_; ++z) jump_mass += f[z] * q_ * rho_[z];
    for (size_t z = 0; z < m_; ++z)
      next[z] = f[z] * (1.0 - q_ * rho_[z]) * trans_prob(z, a[t - 1], a[t]) +
                jump_mass * pu[z] * inv_n;
    const double c = kernels::reduce_sum(next.data(), m_);
    if (!(c > 0.0)) return kNegInf;
    ll += std::log(c);
    kernels::scale(next.data(), m_, 1.0 / c);
    std::swap(f, next);
  }
  return ll;
}

Trajectory SwitchingFlowModel::sample(const std::string& user, size_t length,
                                      Rng& rng) const {
  return sample_with_latents(user, length, rng, nullptr);
}

Trajectory SwitchingFlowModel::sample_with_latents(const std::string& user,
                                                   size_t length, Rng& rng,
                                                   SwitchingFlowLatents* latents) const {
  Trajectory t;
  t.user = user;
  t.actions.reserve(length);
  if (latents) {
    latents->candidates.assign(length, 0);
    latents->jumps.assign(length, 0);
    latents->envs.assign(length, 0);
  }
  if (length == 0) return t;
  const auto& pu = preference(user);
  const size_t n = vocab_->size();

  auto sample_row = [&](size_t env, int32_t src) -> int32_t {
    auto it = trans_.src_row.find(src);
    if (it == trans_.src_row.end()) return static_cast<int32_t>(rng.below(n));
    const size_t row = it->second;
    const double floor_mass =
        trans_.floor[env * trans_.src_row.size() + row] * static_cast<double>(n);
    if (rng.uniform() < floor_mass) return static_cast<int32_t>(rng.below(n));
    const size_t begin = trans_.row_offset[row], end = trans_.row_offset[row + 1];
    double total = 0.0;
    for (size_t p = begin; p < end; ++p) total += trans_.excess[env * trans_.dst.size() + p];
    double u = rng.uniform() * total;
    for (size_t p = begin; p < end; ++p) {
      u -= trans_.excess[env * trans_.dst.size() + p];
      if (u < 0.0) return trans_.dst[p];
    }
    return trans_.dst[end - 1];
  };

  size_t env = rng.categorical(pu);
  t.actions.push_back(static_cast<int32_t>(rng.below(n)));  // jump emission
  if (latents) {
    latents->candidates[0] = 1;
    latents->jumps[0] = 1;
    latents->envs[0] = static_cast<int32_t>(env);
  }
  for (size_t i = 1; i < length; ++i) {
    bool jumped = false;
    const bool candidate = rng.bernoulli(q_);
    if (candidate && rng.bernoulli(rho_[env])) {
      env = rng.categorical(pu);
      jumped = true;
    }
    t.actions.push_back(jumped ? static_cast<int32_t>(rng.below(n))
                               : sample_row(env, t.actions.back()));
    if (latents) {
      latents->candidates[i] = candidate ? 1 : 0;
      latents->jumps[i] = jumped ? 1 : 0;
      latents->envs[i] = static_cast<int32_t>(env);
    }
  }
  return t;
}

// Cached forward/backward over the composite environment chain; each
// candidate is then O(n_envs) with two sparse transition lookups.
class SwitchingFlowScorer : public ReplacementScorer {
 public:
  SwitchingFlowScorer(const SwitchingFlowModel& m, const Trajectory& x)
      : m_(m), x_(x.actions), pu_(m.preference(x.user)) {
    const size_t M = m_.m_;
    const size_t T = x_.size();
    const double inv_n = 1.0 / static_cast<double>(m_.vocab_->size());
    fwd_.resize(T * M);
    bwd_.resize(T * M);
    log_c_.resize(T);

    for (size_t z = 0; z < M; ++z) fwd_[z] = pu_[z] * inv_n;
    double c = kernels::reduce_sum(fwd_.data(), M);
    log_c_[0] = std::log(c);
    ll_ = log_c_[0];
    kernels::scale(fwd_.data(), M, 1.0 / c);
    for (size_t t = 1; t < T; ++t) {
      const double* prev = fwd_.data() + (t - 1) * M;
      double* cur = fwd_.data() + t * M;
      double jump_mass = 0.0;
      for (size_t z = 0; z < M; ++z) jump_mass += prev[z] * m_.q_ * m_.rho_[z];
      for (size_t z = 0; z < M; ++z)
        cur[z] = prev[z] * (1.0 - m_.q_ * m_.rho_[z]) *
                     m_.trans_prob(z, x_[t - 1], x_[t]) +
                 jump_mass * pu_[z] * inv_n;
      c = kernels::reduce_sum(cur, M);
      log_c_[t] = std::log(c);
      ll_ += log_c_[t];
      kernels::scale(cur, M, 1.0 / c);
    }

    for (size_t z = 0; z < M; ++z) bwd_[(T - 1) * M + z] = 1.0;
    for (size_t t = T - 1; t-- > 0;) {
      const double* nxt = bwd_.data() + (t + 1) * M;
      double* cur = bwd_.data() + t * M;
      double h = 0.0;
      for (size_t z = 0; z < M; ++z) h += pu_[z] * nxt[z];
      const double inv_c = std::exp(-log_c_[t + 1]);
      for (size_t z = 0; z < M; ++z)
        cur[z] = ((1.0 - m_.q_ * m_.rho_[z]) * m_.trans_prob(z, x_[t], x_[t + 1]) * nxt[z] +
                  m_.q_ * m_.rho_[z] * inv_n * h) *
                 inv_c;
    }
  }

  void scores(size_t j, std::span<const int32_t> candidates,
              std::span<double> out) override {
    const size_t M = m_.m_;
    const size_t T = x_.size();
    if (j >= T) throw std::out_of_range("switchingflow: bad position");
    const double inv_n = 1.0 / static_cast<double>(m_.vocab_->size());

    if (T == 1) {
      // Single action is a forced jump: uniform emission, identical scores.
      for (size_t i = 0; i < out.size(); ++i) out[i] = ll_;
      return;
    }

    std::vector<double> g(M);
    const double* f_prev = j > 0 ? fwd_.data() + (j - 1) * M : nullptr;
    for (size_t i = 0; i < candidates.size(); ++i) {
      const int32_t a = candidates[i];
      double inner = 0.0;
      if (j + 1 < T) {
        const double* b1 = bwd_.data() + (j + 1) * M;
        double h = 0.0;
        for (size_t z = 0; z < M; ++z) h += pu_[z] * b1[z];
        for (size_t z = 0; z < M; ++z)
          g[z] = (1.0 - m_.q_ * m_.rho_[z]) * m_.trans_prob(z, a, x_[j + 1]) * b1[z] +
                 m_.q_ * m_.rho_[z] * inv_n * h;
      } else {
        for (size_t z = 0; z < M; ++z) g[z] = 1.0;
      }

      if (j == 0) {
        for (size_t z = 0; z < M; ++z) inner += pu_[z] * inv_n * g[z];
        // f(0) is candidate-independent; remove its cached normalizer too.
        out[i] = std::log(inner) + ll_ - log_c_[0] -
                 (j + 1 < T ? log_c_[1] : 0.0);
      } else {
        double gh = 0.0;
        for (size_t z = 0; z < M; ++z) gh += pu_[z] * g[z];
        for (size_t z = 0; z < M; ++z)
          inner += f_prev[z] * ((1.0 - m_.q_ * m_.rho_[z]) *
                                    m_.trans_prob(z, x_[j - 1], a) * g[z] +
                                m_.q_ * m_.rho_[z] * inv_n * gh);
        out[i] = std::log(inner) + ll_ - log_c_[j] -
                 (j + 1 < T ? log_c_[j + 1] : 0.0);
      }
    }
  }

 private:
  const SwitchingFlowModel& m_;
  std::vector<int32_t> x_;
  const std::vector<double>& pu_;
  std::vector<double> fwd_, bwd_, log_c_;
  double ll_ = 0.0;
};

std::unique_ptr<ReplacementScorer> SwitchingFlowModel::make_replacement_scorer(
    const Trajectory& x) const {
  return std::make_unique<SwitchingFlowScorer>(*this, x);
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

namespace {

void seed_latents_from_hmm(const Corpus& corpus, SwitchingFlowSampler& sampler,
                           size_t n_envs, uint64_t seed, Rng& rng) {
  HmmModel::FitOptions hopt;
  hopt.n_states = n_envs;
  hopt.max_iters = 30;
  hopt.restarts = 5;
  hopt.pseudocount = 1.0;
  hopt.holdout_fraction = 0.0;
  hopt.seed = seed;
  auto hmm = HmmModel::fit(corpus, hopt);
  for (size_t i = 0; i < corpus.trajectories.size(); ++i) {
    const auto path = hmm->viterbi(corpus.trajectories[i]);
    SwitchingFlowLatents l;
    const size_t t_len = path.size();
    l.candidates.assign(t_len, 0);
    l.jumps.assign(t_len, 0);
    l.envs.assign(t_len, 0);
    for (size_t t = 0; t < t_len; ++t) {
      l.envs[t] = path[t];
      l.jumps[t] = (t == 0 || path[t] != path[t - 1]) ? 1 : 0;
      l.candidates[t] = l.jumps[t];
    }
    sampler.set_latents(i, std::move(l));
  }
  // Bring the parameter draws in line with the seeded latents before the
  // first FFBS pass; otherwise it would scramble them against prior draws.
  sampler.sample_transition_tensor(rng);
  sampler.sample_rho(rng);
  sampler.sample_pref(rng);
}

std::unique_ptr<SwitchingFlowModel> gibbs_run(const Corpus& corpus, double q,
                                              const SwitchingFlowOptions& opt,
                                              SwitchingFlowModel::FitReport* report) {
  SwitchingFlowSampler sampler(corpus, opt.n_envs, q, opt.priors);
  uint64_t qbits;
  static_assert(sizeof(qbits) == sizeof(q));
  std::memcpy(&qbits, &q, sizeof(qbits));
  Rng rng(derive_seed(opt.seed, "sf-gibbs", qbits));
  sampler.init_from_prior(rng);
  if (opt.hmm_init && opt.n_envs >= 2)
    seed_latents_from_hmm(corpus, sampler, opt.n_envs,
                          derive_seed(opt.seed, "sf-hmm-init", qbits), rng);

  const size_t M = opt.n_envs;
  SwitchingFlowModel::TransEstimate csr = sampler.export_csr();
  const size_t n_rows = csr.src_row.size();
  const size_t n_pairs = csr.dst.size();
  std::vector<size_t> pair_row(n_pairs);
  for (size_t r = 0; r < n_rows; ++r)
    for (size_t p = csr.row_offset[r]; p < csr.row_offset[r + 1]; ++p) pair_row[p] = r;

  std::vector<double> rho_sum(M, 0.0);
  std::vector<std::vector<double>> pref_sum(sampler.n_users(), std::vector<double>(M, 0.0));
  std::vector<double> floor_sum(M * n_rows, 0.0);
  std::vector<double> excess_sum(M * n_pairs, 0.0);
  std::vector<std::vector<int32_t>> seg_hist;
  if (opt.collect_segmentation) {
    seg_hist.resize(sampler.n_trajectories());
    for (size_t i = 0; i < sampler.n_trajectories(); ++i)
      seg_hist[i].assign(corpus.trajectories[i].actions.size() * M, 0);
  }
  double jump_rate_sum = 0.0;

  const double a = opt.priors.a;
  const double nn = static_cast<double>(corpus.vocab->size());
  const size_t total_sweeps = opt.burn_in + opt.n_retained;
  size_t retained = 0;
  for (size_t s = 0; s < total_sweeps; ++s) {
    sampler.sweep(rng);
    if (s < opt.burn_in) continue;
    ++retained;
    auto counts = sampler.transition_counts();
    for (size_t z = 0; z < M; ++z) {
      for (size_t r = 0; r < n_rows; ++r)
        floor_sum[z * n_rows + r] += a / (nn * a + counts.row_total[z * n_rows + r]);
      for (size_t p = 0; p < n_pairs; ++p) {
        const double c = counts.pair_count[z * n_pairs + p];
        if (c > 0.0)
          excess_sum[z * n_pairs + p] +=
              c / (nn * a + counts.row_total[z * n_rows + pair_row[p]]);
      }
    }
    for (size_t z = 0; z < M; ++z) rho_sum[z] += sampler.rho()[z];
    for (size_t u = 0; u < sampler.n_users(); ++u)
      for (size_t z = 0; z < M; ++z) pref_sum[u][z] += sampler.pref(u)[z];
    jump_rate_sum += sampler.jump_rate();
    if (opt.collect_segmentation) {
      for (size_t i = 0; i < sampler.n_trajectories(); ++i) {
        const auto& l = sampler.latents(i);
        for (size_t t = 0; t < l.envs.size(); ++t)
          ++seg_hist[i][t * M + static_cast<size_t>(l.envs[t])];
      }
    }
  }

  const double inv_ret = 1.0 / static_cast<double>(retained);
  std::vector<double> rho(M);
  for (size_t z = 0; z < M; ++z) {
    rho[z] = rho_sum[z] * inv_ret;
    rho[z] = std::min(std::max(rho[z], 1e-12), 1.0 - 1e-12);
  }
  std::unordered_map<std::string, std::vector<double>> pref;
  for (size_t u = 0; u < sampler.n_users(); ++u) {
    auto v = pref_sum[u];
    for (double& x : v) x *= inv_ret;
    pref.emplace(sampler.user_name(u), std::move(v));
  }

  SwitchingFlowModel::TransEstimate trans = std::move(csr);
  trans.floor.resize(M * n_rows);
  trans.excess.resize(M * n_pairs);
  for (size_t i = 0; i < floor_sum.size(); ++i) trans.floor[i] = floor_sum[i] * inv_ret;
  for (size_t i = 0; i < excess_sum.size(); ++i) trans.excess[i] = excess_sum[i] * inv_ret;

  if (report) {
    report->chosen_q = q;
    report->mean_jump_rate = jump_rate_sum * inv_ret;
    if (opt.collect_segmentation) {
      report->segmentation.resize(seg_hist.size());
      for (size_t i = 0; i < seg_hist.size(); ++i) {
        const size_t T = seg_hist[i].size() / M;
        report->segmentation[i].resize(T);
        for (size_t t = 0; t < T; ++t) {
          size_t best = 0;
          for (size_t z = 1; z < M; ++z)
            if (seg_hist[i][t * M + z] > seg_hist[i][t * M + best]) best = z;
          report->segmentation[i][t] = static_cast<int32_t>(best);
        }
      }
    }
  }

  return std::make_unique<SwitchingFlowModel>(corpus.vocab, M, q, opt.priors,
                                              std::move(rho), std::move(pref),
                                              std::move(trans));
}

}  // namespace

std::unique_ptr<SwitchingFlowModel> SwitchingFlowModel::fit(
    const Corpus& corpus, const SwitchingFlowOptions& opt, FitReport* report) {
  std::vector<double> grid = opt.q_grid.empty() ? std::vector<double>{opt.q} : opt.q_grid;
  for (double q : grid)
    if (!(q > 0.0) || q > 1.0)
      throw std::invalid_argument("switchingflow: q must be in (0, 1]");

  double chosen = grid[0];
  std::vector<double> grid_ll;
  if (grid.size() > 1) {
    auto split = split_corpus(corpus, opt.holdout_fraction,
                              derive_seed(opt.seed, "sf-q-holdout"));
    Corpus fit_part = split.test.empty() ? corpus : subset(corpus, split.train);
    Corpus eval_part = split.test.empty() ? corpus : subset(corpus, split.test);
    double best = kNegInf;
    for (double q : grid) {
      auto m = gibbs_run(fit_part, q, opt, nullptr);
      double ll = 0.0;
      size_t actions = 0;
      for (const auto& t : eval_part.trajectories) {
        ll += m->log_score(t);
        actions += t.length();
      }
      const double per_action = ll / static_cast<double>(actions);
      grid_ll.push_back(per_action);
      if (per_action > best) {
        best = per_action;
        chosen = q;
      }
    }
  }

  auto model = gibbs_run(corpus, chosen, opt, report);
  if (report) report->grid_holdout_ll = grid_ll;
  return model;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json SwitchingFlowModel::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  std::vector<int32_t> srcs(trans_.src_row.size());
  for (const auto& [src, row] : trans_.src_row) srcs[row] = src;
  for (size_t r = 0; r < srcs.size(); ++r) {
    nlohmann::json dsts = nlohmann::json::array();
    for (size_t p = trans_.row_offset[r]; p < trans_.row_offset[r + 1]; ++p)
      dsts.push_back(trans_.dst[p]);
    rows.push_back({{"src", srcs[r]}, {"dst", dsts}});
  }
  nlohmann::json pref = nlohmann::json::object();
  for (const auto& [user, p] : pref_) pref[user] = p;
  return {{"n_envs", m_},
          {"q", q_},
          {"prior_a", priors_.a},
          {"prior_r", priors_.r},
          {"prior_s", priors_.s},
          {"rho", rho_},
          {"pref", pref},
          {"rows", rows},
          {"floor", trans_.floor},
          {"excess", trans_.excess}};
}

std::unique_ptr<SwitchingFlowModel> SwitchingFlowModel::from_json(
    const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab) {
  SwitchingFlowPriors priors{j.at("prior_a").get<double>(), j.at("prior_r").get<double>(),
                             j.at("prior_s").get<double>()};
  TransEstimate trans;
  trans.row_offset.push_back(0);
  for (const auto& row : j.at("rows")) {
    trans.src_row[row.at("src").get<int32_t>()] = trans.row_offset.size() - 1;
    for (const auto& d : row.at("dst")) trans.dst.push_back(d.get<int32_t>());
    trans.row_offset.push_back(trans.dst.size());
  }
  trans.floor = j.at("floor").get<std::vector<double>>();
  trans.excess = j.at("excess").get<std::vector<double>>();
  std::unordered_map<std::string, std::vector<double>> pref;
  for (const auto& [user, p] : j.at("pref").items())
    pref[user] = p.get<std::vector<double>>();
  return std::make_unique<SwitchingFlowModel>(
      std::move(vocab), j.at("n_envs").get<size_t>(), j.at("q").get<double>(), priors,
      j.at("rho").get<std::vector<double>>(), std::move(pref), std::move(trans));
}

}  // namespace seqod
