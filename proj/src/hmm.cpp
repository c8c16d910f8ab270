#include "seqod/models/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "seqod/kernels.hpp"

namespace seqod {

namespace {

void check_distribution(const std::vector<double>& v, size_t stride, const char* what) {
  for (size_t r = 0; r < v.size() / stride; ++r) {
    double s = 0.0;
    for (size_t i = 0; i < stride; ++i) {
      const double x = v[r * stride + i];
      if (x < 0.0 || !std::isfinite(x)) throw std::invalid_argument(std::string("hmm: bad ") + what);
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument(std::string("hmm: ") + what + " row does not sum to 1");
  }
}

struct ForwardPass {
  std::vector<double> alpha;  // T x k, scaled to sum 1 per row
  std::vector<double> log_c;  // per-step normalizers
  double log_lik = 0.0;
  bool ok = true;             // false if some step had zero mass
};

ForwardPass run_forward(const std::vector<int32_t>& x, size_t k,
                        const std::vector<double>& pi, const std::vector<double>& trans,
                        const std::vector<double>& emit, size_t n) {
  const size_t T = x.size();
  ForwardPass fp;
  fp.alpha.resize(T * k);
  fp.log_c.resize(T);
  std::vector<double> buf(k);

  double* row = fp.alpha.data();
  for (size_t i = 0; i < k; ++i)
    row[i] = pi[i] * emit[i * n + static_cast<size_t>(x[0])];
  for (size_t t = 0; t < T; ++t) {
    row = fp.alpha.data() + t * k;
    if (t > 0) {
      kernels::chain_step(fp.alpha.data() + (t - 1) * k, trans.data(), k, buf.data());
      for (size_t i = 0; i < k; ++i)
        row[i] = buf[i] * emit[i * n + static_cast<size_t>(x[t])];
    }
    const double c = kernels::reduce_sum(row, k);
    if (c <= 0.0 || !std::isfinite(c)) {
      fp.ok = false;
      fp.log_lik = -std::numeric_limits<double>::infinity();
      return fp;
    }
    kernels::scale(row, k, 1.0 / c);
    fp.log_c[t] = std::log(c);
    fp.log_lik += fp.log_c[t];
  }
  return fp;
}

// Scaled backward; beta rows satisfy sum_i alpha[t][i]*beta[t][i] = 1.
std::vector<double> run_backward(const std::vector<int32_t>& x, size_t k,
                                 const std::vector<double>& trans,
                                 const std::vector<double>& emit, size_t n,
                                 const std::vector<double>& log_c) {
  const size_t T = x.size();
  std::vector<double> beta(T * k);
  std::vector<double> buf(k);
  for (size_t i = 0; i < k; ++i) beta[(T - 1) * k + i] = 1.0;
  for (size_t t = T - 1; t-- > 0;) {
    const double inv_c = std::exp(-log_c[t + 1]);
    for (size_t j = 0; j < k; ++j)
      buf[j] = emit[j * n + static_cast<size_t>(x[t + 1])] * beta[(t + 1) * k + j];
    double* row = beta.data() + t * k;
    for (size_t i = 0; i < k; ++i) {
      double s = 0.0;
      const double* tr = trans.data() + i * k;
      for (size_t j = 0; j < k; ++j) s += tr[j] * buf[j];
      row[i] = s * inv_c;
    }
  }
  return beta;
}

void normalize_rows(std::vector<double>& v, size_t stride) {
  for (size_t r = 0; r < v.size() / stride; ++r) {
    double* row = v.data() + r * stride;
    const double s = kernels::reduce_sum(row, stride);
    if (s > 0.0) {
      kernels::scale(row, stride, 1.0 / s);
    } else {
      for (size_t i = 0; i < stride; ++i) row[i] = 1.0 / static_cast<double>(stride);
    }
  }
}

}  // namespace

HmmModel::HmmModel(std::shared_ptr<const Vocabulary> vocab, size_t n_states,
                   std::vector<double> pi, std::vector<double> trans,
                   std::vector<double> emit)
    : vocab_(std::move(vocab)),
      k_(n_states),
      pi_(std::move(pi)),
      trans_(std::move(trans)),
      emit_(std::move(emit)) {
  if (k_ < 1) throw std::invalid_argument("hmm: n_states must be >= 1");
  if (pi_.size() != k_ || trans_.size() != k_ * k_ || emit_.size() != k_ * vocab_->size())
    throw std::invalid_argument("hmm: parameter shape mismatch");
  check_distribution(pi_, k_, "pi");
  check_distribution(trans_, k_, "trans");
  check_distribution(emit_, vocab_->size(), "emit");
}

double hmm_em_step(const Corpus& corpus, size_t k, std::vector<double>& pi,
                   std::vector<double>& trans, std::vector<double>& emit,
                   double pseudocount) {
  const size_t n = corpus.vocab->size();
  std::vector<double> pi_acc(k, 0.0);
  std::vector<double> x_acc(k * k, 0.0);   // sum_t outer(alpha_t, u_t); xi = trans .* x_acc
  std::vector<double> e_acc(k * n, 0.0);
  std::vector<double> u(k), gamma(k);
  double ll = 0.0;

  for (const auto& traj : corpus.trajectories) {
    const auto& x = traj.actions;
    const size_t T = x.size();
    auto fwd = run_forward(x, k, pi, trans, emit, n);
    if (!fwd.ok) return -std::numeric_limits<double>::infinity();
    ll += fwd.log_lik;
    auto beta = run_backward(x, k, trans, emit, n, fwd.log_c);

    for (size_t t = 0; t < T; ++t) {
      const double* a = fwd.alpha.data() + t * k;
      const double* b = beta.data() + t * k;
      for (size_t i = 0; i < k; ++i) gamma[i] = a[i] * b[i];
      if (t == 0) kernels::axpy(pi_acc.data(), gamma.data(), k, 1.0);
      for (size_t i = 0; i < k; ++i)
        e_acc[i * n + static_cast<size_t>(x[t])] += gamma[i];
      if (t + 1 < T) {
        const double inv_c = std::exp(-fwd.log_c[t + 1]);
        const double* b1 = beta.data() + (t + 1) * k;
        for (size_t j = 0; j < k; ++j)
          u[j] = emit[j * n + static_cast<size_t>(x[t + 1])] * b1[j] * inv_c;
        kernels::outer_acc(x_acc.data(), a, u.data(), k, 1.0);
      }
    }
  }

  for (size_t i = 0; i < k; ++i) pi_acc[i] += pseudocount;
  for (size_t i = 0; i < k * k; ++i) x_acc[i] = trans[i] * x_acc[i] + pseudocount;
  for (size_t i = 0; i < k * n; ++i) e_acc[i] += pseudocount;
  normalize_rows(pi_acc, k);
  normalize_rows(x_acc, k);
  normalize_rows(e_acc, n);
  pi = std::move(pi_acc);
  trans = std::move(x_acc);
  emit = std::move(e_acc);
  return ll;
}

std::unique_ptr<HmmModel> HmmModel::fit(const Corpus& corpus, const FitOptions& opt,
                                        FitReport* report) {
  if (opt.n_states < 1) throw std::invalid_argument("hmm: n_states must be >= 1");
  if (corpus.trajectories.empty()) throw std::invalid_argument("hmm: empty corpus");
  const size_t k = opt.n_states;
  const size_t n = corpus.vocab->size();

  Corpus train = corpus;
  Corpus holdout;
  holdout.vocab = corpus.vocab;
  if (opt.holdout_fraction > 0.0 && corpus.trajectories.size() >= 2 && opt.restarts > 1) {
    auto split = split_corpus(corpus, opt.holdout_fraction, derive_seed(opt.seed, "hmm-holdout"));
    if (!split.test.empty()) {
      train = subset(corpus, split.train);
      holdout = subset(corpus, split.test);
    }
  }

  auto init_params = [&](int restart, std::vector<double>& pi, std::vector<double>& trans,
                         std::vector<double>& emit) {
    Rng rng(derive_seed(opt.seed, "hmm-init", static_cast<uint64_t>(restart)));
    std::vector<double> ones_k(k, 1.0), ones_n(n, 1.0);
    pi = rng.dirichlet(ones_k);
    trans.resize(k * k);
    emit.resize(k * n);
    for (size_t i = 0; i < k; ++i) rng.dirichlet(ones_k, {trans.data() + i * k, k});
    for (size_t i = 0; i < k; ++i) rng.dirichlet(ones_n, {emit.data() + i * n, n});
  };

  auto run_em = [&](const Corpus& data, std::vector<double>& pi, std::vector<double>& trans,
                    std::vector<double>& emit, std::vector<double>* path) {
    double prev = -std::numeric_limits<double>::infinity();
    for (size_t it = 0; it < opt.max_iters; ++it) {
      const double ll = hmm_em_step(data, k, pi, trans, emit, opt.pseudocount);
      if (path) path->push_back(ll);
      if (std::isfinite(prev) &&
          std::abs(ll - prev) < opt.tol * (std::abs(prev) + 1.0))
        break;
      prev = ll;
    }
  };

  auto corpus_ll = [&](const Corpus& data, const std::vector<double>& pi,
                       const std::vector<double>& trans, const std::vector<double>& emit) {
    double ll = 0.0;
    for (const auto& t : data.trajectories)
      ll += run_forward(t.actions, k, pi, trans, emit, n).log_lik;
    return ll;
  };

  int best_restart = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, opt.restarts);
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> pi, trans, emit;
    init_params(r, pi, trans, emit);
    run_em(train, pi, trans, emit, nullptr);
    const double score = holdout.trajectories.empty()
                             ? corpus_ll(train, pi, trans, emit)
                             : corpus_ll(holdout, pi, trans, emit);
    if (score > best_score) {
      best_score = score;
      best_restart = r;
    }
  }

  // Refit the winning initialization on the full corpus.
  std::vector<double> pi, trans, emit;
  init_params(best_restart, pi, trans, emit);
  std::vector<double> path;
  run_em(corpus, pi, trans, emit, &path);

  if (report) {
    report->objective_path = path;
    report->chosen_restart = best_restart;
    report->train_log_lik = corpus_ll(corpus, pi, trans, emit);
    report->holdout_log_lik =
        holdout.trajectories.empty() ? report->train_log_lik
                                     : corpus_ll(holdout, pi, trans, emit);
  }
  return std::make_unique<HmmModel>(corpus.vocab, k, std::move(pi), std::move(trans),
                                    std::move(emit));
}

double HmmModel::log_score(const Trajectory& x) const {
  if (x.actions.empty()) throw std::invalid_argument("hmm: empty trajectory");
  return run_forward(x.actions, k_, pi_, trans_, emit_, vocab_->size()).log_lik;
}

Trajectory HmmModel::sample(const std::string& user, size_t length, Rng& rng) const {
  Trajectory t;
  t.user = user;
  t.actions.reserve(length);
  const size_t n = vocab_->size();
  size_t state = 0;
  for (size_t i = 0; i < length; ++i) {
    state = i == 0 ? rng.categorical(pi_)
                   : rng.categorical({trans_.data() + state * k_, k_});
    t.actions.push_back(
        static_cast<int32_t>(rng.categorical({emit_.data() + state * n, n})));
  }
  return t;
}

std::vector<int32_t> HmmModel::viterbi(const Trajectory& x) const {
  const auto& obs = x.actions;
  const size_t T = obs.size();
  if (T == 0) throw std::invalid_argument("hmm: empty trajectory");
  const size_t n = vocab_->size();
  auto lg = [](double v) { return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity(); };

  std::vector<double> delta(T * k_);
  std::vector<int32_t> back(T * k_, 0);
  for (size_t i = 0; i < k_; ++i)
    delta[i] = lg(pi_[i]) + lg(emit_[i * n + static_cast<size_t>(obs[0])]);
  for (size_t t = 1; t < T; ++t) {
    for (size_t j = 0; j < k_; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int32_t arg = 0;
      for (size_t i = 0; i < k_; ++i) {
        const double v = delta[(t - 1) * k_ + i] + lg(trans_[i * k_ + j]);
        if (v > best) {
          best = v;
          arg = static_cast<int32_t>(i);
        }
      }
      delta[t * k_ + j] = best + lg(emit_[j * n + static_cast<size_t>(obs[t])]);
      back[t * k_ + j] = arg;
    }
  }
  std::vector<int32_t> path(T);
  size_t best_end = 0;
  for (size_t i = 1; i < k_; ++i)
    if (delta[(T - 1) * k_ + i] > delta[(T - 1) * k_ + best_end]) best_end = i;
  path[T - 1] = static_cast<int32_t>(best_end);
  for (size_t t = T - 1; t-- > 0;)
    path[t] = back[(t + 1) * k_ + static_cast<size_t>(path[t + 1])];
  return path;
}

class HmmScorer : public ReplacementScorer {
 public:
  HmmScorer(const HmmModel& m, const Trajectory& x) : m_(m), x_(x.actions) {
    const size_t n = m_.vocab_->size();
    fwd_ = run_forward(x_, m_.k_, m_.pi_, m_.trans_, m_.emit_, n);
    if (fwd_.ok) beta_ = run_backward(x_, m_.k_, m_.trans_, m_.emit_, n, fwd_.log_c);
  }

  bool ok() const { return fwd_.ok; }

  void scores(size_t j, std::span<const int32_t> candidates,
              std::span<double> out) override {
    const size_t k = m_.k_;
    const size_t n = m_.vocab_->size();
    // pred_i = P(S_j = i | x_{<j}) up to the cached scaling.
    std::vector<double> pred(k);
    if (j == 0) {
      pred = m_.pi_;
    } else {
      kernels::chain_step(fwd_.alpha.data() + (j - 1) * k, m_.trans_.data(), k, pred.data());
    }
    const double* b = beta_.data() + j * k;
    std::vector<double> w(k);
    for (size_t i = 0; i < k; ++i) w[i] = pred[i] * b[i];
    const double rest = fwd_.log_lik - fwd_.log_c[j];
    for (size_t c = 0; c < candidates.size(); ++c) {
      const size_t a = static_cast<size_t>(candidates[c]);
      double inner = 0.0;
      for (size_t i = 0; i < k; ++i) inner += w[i] * m_.emit_[i * n + a];
      out[c] = inner > 0.0 ? std::log(inner) + rest
                           : -std::numeric_limits<double>::infinity();
    }
  }

 private:
  const HmmModel& m_;
  std::vector<int32_t> x_;
  ForwardPass fwd_;
  std::vector<double> beta_;
};

std::unique_ptr<ReplacementScorer> HmmModel::make_replacement_scorer(
    const Trajectory& x) const {
  auto scorer = std::make_unique<HmmScorer>(*this, x);
  if (!scorer->ok())  // zero-probability base sequence: fall back to rescoring
    return std::make_unique<NaiveReplacementScorer>(*this, x);
  return scorer;
}

nlohmann::json HmmModel::to_json() const {
  return {{"n_states", k_}, {"pi", pi_}, {"trans", trans_}, {"emit", emit_}};
}

std::unique_ptr<HmmModel> HmmModel::from_json(
    const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab) {
  return std::make_unique<HmmModel>(
      std::move(vocab), j.at("n_states").get<size_t>(),
      j.at("pi").get<std::vector<double>>(), j.at("trans").get<std::vector<double>>(),
      j.at("emit").get<std::vector<double>>());
}

}  // namespace seqod
