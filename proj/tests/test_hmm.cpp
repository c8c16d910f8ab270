#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "seqod/models/bag.hpp"
#include "seqod/models/hmm.hpp"

using namespace seqod;

namespace {

std::shared_ptr<const Vocabulary> toy_vocab(size_t n) {
  std::vector<std::string> tokens(n);
  for (size_t i = 0; i < n; ++i) tokens[i] = std::string(1, static_cast<char>('a' + i));
  return std::make_shared<Vocabulary>(Vocabulary::from_tokens(tokens));
}

std::vector<double> random_rows(size_t rows, size_t cols, Rng& rng) {
  std::vector<double> m(rows * cols);
  const std::vector<double> ones(cols, 1.0);
  for (size_t r = 0; r < rows; ++r) rng.dirichlet(ones, {m.data() + r * cols, cols});
  return m;
}

Corpus corpus_from(std::shared_ptr<const Vocabulary> vocab,
                   std::vector<std::vector<int32_t>> seqs) {
  Corpus c;
  std::vector<int64_t> counts(vocab->size(), 0);
  for (const auto& s : seqs)
    for (int32_t a : s) ++counts[static_cast<size_t>(a)];
  c.vocab = std::make_shared<Vocabulary>(vocab->with_counts(counts));
  for (size_t i = 0; i < seqs.size(); ++i)
    c.trajectories.push_back({"u" + std::to_string(i), std::move(seqs[i])});
  return c;
}

}  // namespace

TEST_CASE("hmm forward marginal equals exhaustive path enumeration") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const size_t k = 1 + rng.below(3);
    const size_t n = 2 + rng.below(3);
    const size_t t_len = 1 + rng.below(6);
    auto pi = random_rows(1, k, rng);
    auto trans = random_rows(k, k, rng);
    auto emit = random_rows(k, n, rng);
    HmmModel m(toy_vocab(n), k, pi, trans, emit);
    std::vector<int32_t> x(t_len);
    for (auto& a : x) a = static_cast<int32_t>(rng.below(n));
    const double expect = oracle::hmm_log_score(pi, trans, emit, k, n, x);
    CHECK(m.log_score({"u", x}) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("viterbi path attains the enumerated maximum and never beats the marginal") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t k = 1 + rng.below(3);
    const size_t n = 2 + rng.below(3);
    const size_t t_len = 1 + rng.below(6);
    auto pi = random_rows(1, k, rng);
    auto trans = random_rows(k, k, rng);
    auto emit = random_rows(k, n, rng);
    HmmModel m(toy_vocab(n), k, pi, trans, emit);
    std::vector<int32_t> x(t_len);
    for (auto& a : x) a = static_cast<int32_t>(rng.below(n));

    const auto path = m.viterbi({"u", x});
    double lp = std::log(pi[static_cast<size_t>(path[0])]) +
                std::log(emit[static_cast<size_t>(path[0]) * n + static_cast<size_t>(x[0])]);
    for (size_t t = 1; t < t_len; ++t)
      lp += std::log(trans[static_cast<size_t>(path[t - 1]) * k +
                           static_cast<size_t>(path[t])]) +
            std::log(emit[static_cast<size_t>(path[t]) * n + static_cast<size_t>(x[t])]);
    const double best = oracle::hmm_best_path_log(pi, trans, emit, k, n, x);
    CHECK(lp == doctest::Approx(best).epsilon(1e-9));
    CHECK(lp <= m.log_score({"u", x}) + 1e-12);
  }
}

TEST_CASE("one-state fit collapses to smoothed empirical frequencies") {
  auto vocab = toy_vocab(3);
  auto corpus = corpus_from(vocab, {{0, 0, 1, 2, 0}, {1, 0, 2}});
  HmmModel::FitOptions opt;
  opt.n_states = 1;
  opt.max_iters = 5;
  opt.restarts = 1;
  opt.pseudocount = 1.0;
  auto m = HmmModel::fit(corpus, opt);
  // counts: a=4, b=2, c=2, total=8; +1 smoothing over 3 actions
  CHECK(m->emit()[0] == doctest::Approx(5.0 / 11.0).epsilon(1e-9));
  CHECK(m->emit()[1] == doctest::Approx(3.0 / 11.0).epsilon(1e-9));
  CHECK(m->emit()[2] == doctest::Approx(3.0 / 11.0).epsilon(1e-9));

  // and identical scores to the bag model with the same smoothing
  auto bag = BagOfActionsModel::fit(corpus, 1.0);
  Trajectory x{"u", {0, 2, 1}};
  CHECK(m->log_score(x) == doctest::Approx(bag->log_score(x)).epsilon(1e-9));
}

TEST_CASE("EM objective is monotone") {
  auto vocab = toy_vocab(4);
  Rng gen(33);
  std::vector<std::vector<int32_t>> seqs;
  for (int i = 0; i < 8; ++i) {
    std::vector<int32_t> s(30);
    for (auto& a : s) a = static_cast<int32_t>(gen.below(4));
    seqs.push_back(std::move(s));
  }
  auto corpus = corpus_from(vocab, seqs);

  SUBCASE("raw likelihood, no regularization") {
    Rng rng(1);
    auto pi = random_rows(1, 3, rng);
    auto trans = random_rows(3, 3, rng);
    auto emit = random_rows(3, 4, rng);
    double prev = -HUGE_VAL;
    for (int it = 0; it < 25; ++it) {
      const double ll = hmm_em_step(corpus, 3, pi, trans, emit, 0.0);
      CHECK(ll >= prev - 1e-8 * std::abs(prev));
      prev = ll;
    }
  }

  SUBCASE("penalized objective with pseudocounts") {
    const double pc = 1.0;
    Rng rng(2);
    auto pi = random_rows(1, 3, rng);
    auto trans = random_rows(3, 3, rng);
    auto emit = random_rows(3, 4, rng);
    auto log_prior = [&](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += std::log(x);
      return pc * s;
    };
    double prev = -HUGE_VAL;
    for (int it = 0; it < 25; ++it) {
      const double pen_before = log_prior(pi) + log_prior(trans) + log_prior(emit);
      const double ll = hmm_em_step(corpus, 3, pi, trans, emit, pc);
      const double objective = ll + pen_before;  // both evaluated at the same params
      CHECK(objective >= prev - 1e-8 * std::abs(prev));
      prev = objective;
    }
  }
}

TEST_CASE("fit recovers a well-separated two-state model") {
  auto vocab = toy_vocab(6);
  // ground truth: state 0 emits {a,b,c}, state 1 emits {d,e,f}, sticky chain
  std::vector<double> pi = {0.5, 0.5};
  std::vector<double> trans = {0.92, 0.08, 0.08, 0.92};
  std::vector<double> emit = {0.5, 0.3, 0.2, 0.0, 0.0, 0.0,
                              0.0, 0.0, 0.0, 0.2, 0.3, 0.5};
  HmmModel truth(vocab, 2, pi, trans, emit);
  Rng rng(7);
  std::vector<std::vector<int32_t>> seqs;
  for (int i = 0; i < 60; ++i) seqs.push_back(truth.sample("u", 80, rng).actions);
  auto corpus = corpus_from(vocab, seqs);

  HmmModel::FitOptions opt;
  opt.n_states = 2;
  opt.max_iters = 80;
  opt.restarts = 3;
  opt.pseudocount = 0.1;
  opt.seed = 4;
  auto m = HmmModel::fit(corpus, opt);

  auto tv = [&](const double* row, const double* ref) {
    double d = 0.0;
    for (size_t a = 0; a < 6; ++a) d += std::abs(row[a] - ref[a]);
    return 0.5 * d;
  };
  const double direct = tv(m->emit().data(), emit.data()) +
                        tv(m->emit().data() + 6, emit.data() + 6);
  const double swapped = tv(m->emit().data(), emit.data() + 6) +
                         tv(m->emit().data() + 6, emit.data());
  CHECK(std::min(direct, swapped) / 2.0 < 0.1);
}

TEST_CASE("degenerate single-token corpus still fits") {
  auto vocab = toy_vocab(2);
  auto corpus = corpus_from(vocab, {{0, 0, 0, 0, 0, 0}});
  HmmModel::FitOptions opt;
  opt.n_states = 2;
  opt.max_iters = 10;
  opt.restarts = 1;
  auto m = HmmModel::fit(corpus, opt);
  CHECK(std::isfinite(m->log_score({"u", {0, 0, 0}})));
}

TEST_CASE("hmm sampling") {
  auto vocab = toy_vocab(3);
  SUBCASE("point masses give the unique sequence") {
    std::vector<double> pi = {1.0, 0.0};
    std::vector<double> trans = {0.0, 1.0, 1.0, 0.0};
    std::vector<double> emit = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0};
    HmmModel m(vocab, 2, pi, trans, emit);
    Rng rng(1);
    auto t = m.sample("u", 6, rng);
    CHECK(t.actions == std::vector<int32_t>{0, 1, 0, 1, 0, 1});
  }
  SUBCASE("one-state empirical frequencies match the emission row") {
    std::vector<double> emit = {0.6, 0.3, 0.1};
    HmmModel m(vocab, 1, {1.0}, {1.0}, emit);
    Rng rng(2);
    auto t = m.sample("u", 100000, rng);
    REQUIRE(t.length() == 100000);
    std::vector<double> freq(3, 0.0);
    for (int32_t a : t.actions) freq[static_cast<size_t>(a)] += 1e-5;
    for (size_t a = 0; a < 3; ++a) CHECK(std::abs(freq[a] - emit[a]) < 0.01);
  }
}

TEST_CASE("hmm replacement scorer equals naive rescoring") {
  Rng rng(44);
  const size_t k = 3, n = 4;
  auto pi = random_rows(1, k, rng);
  auto trans = random_rows(k, k, rng);
  auto emit = random_rows(k, n, rng);
  HmmModel m(toy_vocab(n), k, pi, trans, emit);
  Trajectory x{"u", {0, 3, 1, 2, 2, 0, 1}};
  const std::vector<int32_t> candidates = {0, 1, 2, 3};
  auto fast = m.make_replacement_scorer(x);
  NaiveReplacementScorer naive(m, x);
  for (size_t j = 0; j < x.length(); ++j) {
    std::vector<double> f(4), nv(4);
    fast->scores(j, candidates, f);
    naive.scores(j, candidates, nv);
    for (size_t i = 0; i < 4; ++i) CHECK(f[i] == doctest::Approx(nv[i]).epsilon(1e-9));
  }
}

TEST_CASE("next-step normalization holds for the hmm") {
  Rng rng(45);
  const size_t k = 3, n = 4;
  HmmModel m(toy_vocab(n), k, random_rows(1, k, rng), random_rows(k, k, rng),
             random_rows(k, n, rng));
  Trajectory prefix{"u", {1, 0, 3, 2}};
  const double base = m.log_score(prefix);
  double mass = 0.0;
  Trajectory ext = prefix;
  ext.actions.push_back(0);
  for (size_t a = 0; a < n; ++a) {
    ext.actions.back() = static_cast<int32_t>(a);
    mass += std::exp(m.log_score(ext) - base);
  }
  CHECK(std::abs(mass - 1.0) < 1e-6);
}
