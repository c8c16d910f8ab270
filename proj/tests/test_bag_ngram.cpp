#include <cmath>

#include "doctest.h"
#include "seqod/models/bag.hpp"
#include "seqod/models/ngram.hpp"

using namespace seqod;

namespace {

Corpus make_corpus(std::vector<std::vector<std::string>> seqs) {
  Corpus c;
  c.vocab = std::make_shared<Vocabulary>(Vocabulary::build(seqs));
  for (size_t i = 0; i < seqs.size(); ++i) {
    Trajectory t;
    t.user = "u" + std::to_string(i);
    for (const auto& tok : seqs[i]) t.actions.push_back(c.vocab->id_of(tok));
    c.trajectories.push_back(std::move(t));
  }
  return c;
}

// Next-step normalization: sum over next actions of P(prefix . a) / P(prefix).
double next_step_mass(const NullModel& m, const Trajectory& prefix) {
  const double base = m.log_score(prefix);
  double mass = 0.0;
  Trajectory ext = prefix;
  ext.actions.push_back(0);
  for (size_t a = 0; a < m.vocabulary().size(); ++a) {
    ext.actions.back() = static_cast<int32_t>(a);
    mass += std::exp(m.log_score(ext) - base);
  }
  return mass;
}

}  // namespace

TEST_CASE("bag model scores") {
  // 4 equally frequent actions: every sequence of length 3 has prob 1/64
  auto c = make_corpus({{"a", "b", "c", "d"}});
  auto m = BagOfActionsModel::fit(c, 1.0);
  Trajectory x{"u", {0, 1, 2}};
  CHECK(m->log_score(x) == doctest::Approx(std::log(1.0 / 64.0)).epsilon(1e-12));

  // probs (0.5, 0.5): P(a, a) = 0.25
  auto c2 = make_corpus({{"a", "b", "a", "b"}});
  auto m2 = BagOfActionsModel::fit(c2, 1.0);
  Trajectory aa{"u", {0, 0}};
  CHECK(m2->log_score(aa) == doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("bag model matches the direct product of smoothed frequencies") {
  auto c = make_corpus({{"a", "a", "b", "c", "a", "c"}});
  const double eps = 0.7;
  auto m = BagOfActionsModel::fit(c, eps);
  // counts: a=3, b=1, c=2, N=3, total=6
  const double denom = 3 * eps + 6.0;
  Trajectory x{"u", {0, 2, 1, 0}};
  const double expect = std::log((eps + 3) / denom) + std::log((eps + 2) / denom) +
                        std::log((eps + 1) / denom) + std::log((eps + 3) / denom);
  CHECK(m->log_score(x) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bag sampling matches its distribution") {
  auto c = make_corpus({{"a", "a", "a", "b"}});
  auto m = BagOfActionsModel::fit(c, 1.0);  // p(a) = 4/6, p(b) = 2/6
  Rng rng(5);
  size_t count_a = 0;
  const size_t n = 100000;
  auto t = m->sample("u", n, rng);
  REQUIRE(t.length() == n);
  for (int32_t a : t.actions) count_a += a == 0 ? 1 : 0;
  CHECK(std::abs(static_cast<double>(count_a) / n - 4.0 / 6.0) < 0.01);
}

TEST_CASE("ngram conditional probabilities") {
  // corpus "a b a b": transitions a->b twice, b->a once
  auto c = make_corpus({{"a", "b", "a", "b"}});
  auto m = NgramModel::fit(c, 1, 1.0);
  const int32_t a = 0, b = 1;
  CHECK(m->cond_prob({&a, 1}, b) == doctest::Approx(0.75).epsilon(1e-12));  // (1+2)/(2+2)
  CHECK(m->cond_prob({&a, 1}, a) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(m->cond_prob({&b, 1}, a) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // full-sequence score decomposes through the chain rule
  Trajectory x{"u", {0, 1, 0}};
  const double expect = std::log(m->cond_prob({}, a)) + std::log(0.75) +
                        std::log(2.0 / 3.0);
  CHECK(m->log_score(x) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ngram on a deterministic cycle approaches certainty as epsilon vanishes") {
  std::vector<std::string> cyc;
  for (int rep = 0; rep < 50; ++rep) {
    cyc.push_back("a");
    cyc.push_back("b");
    cyc.push_back("c");
  }
  auto c = make_corpus({cyc});
  auto m = NgramModel::fit(c, 1, 1e-9);
  const int32_t a = 0;
  CHECK(m->cond_prob({&a, 1}, 1) > 0.999999);
}

TEST_CASE("ngram conditionals normalize for observed contexts") {
  auto c = make_corpus({{"a", "b", "a", "c", "b", "b", "a"}});
  auto m = NgramModel::fit(c, 2, 0.5);
  for (int32_t ctx1 = 0; ctx1 < 3; ++ctx1) {
    for (int32_t ctx2 = 0; ctx2 < 3; ++ctx2) {
      const int32_t ctx[2] = {ctx1, ctx2};
      double sum = 0.0;
      for (int32_t x = 0; x < 3; ++x) sum += m->cond_prob({ctx, 2}, x);
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("ngram rejects order zero") {
  auto c = make_corpus({{"a", "b"}});
  CHECK_THROWS_AS(NgramModel::fit(c, 0, 1.0), std::invalid_argument);
}

TEST_CASE("next-step normalization holds for bag and ngram") {
  auto c = make_corpus({{"a", "b", "a", "c", "b", "b", "a", "c", "c", "a"}});
  Trajectory prefix{"u", {0, 1, 2, 1}};
  auto bag = BagOfActionsModel::fit(c, 1.0);
  CHECK(std::abs(next_step_mass(*bag, prefix) - 1.0) < 1e-6);
  for (int order : {1, 2, 3}) {
    auto ng = NgramModel::fit(c, order, 1.0);
    CHECK(std::abs(next_step_mass(*ng, prefix) - 1.0) < 1e-6);
  }
}

TEST_CASE("fast replacement scorers equal naive rescoring") {
  auto c = make_corpus({{"a", "b", "a", "c", "b", "b", "a", "c", "c", "a"},
                        {"c", "c", "b", "a", "b"}});
  Trajectory x{"u", {0, 1, 2, 0, 1, 1, 2}};
  const std::vector<int32_t> candidates = {0, 1, 2};
  for (int order : {1, 2}) {
    auto ng = NgramModel::fit(c, order, 1.0);
    auto fast = ng->make_replacement_scorer(x);
    NaiveReplacementScorer naive(*ng, x);
    for (size_t j = 0; j < x.length(); ++j) {
      std::vector<double> f(3), n(3);
      fast->scores(j, candidates, f);
      naive.scores(j, candidates, n);
      for (size_t i = 0; i < 3; ++i) CHECK(f[i] == doctest::Approx(n[i]).epsilon(1e-10));
    }
  }
  auto bag = BagOfActionsModel::fit(c, 1.0);
  auto fast = bag->make_replacement_scorer(x);
  NaiveReplacementScorer naive(*bag, x);
  for (size_t j = 0; j < x.length(); ++j) {
    std::vector<double> f(3), n(3);
    fast->scores(j, candidates, f);
    naive.scores(j, candidates, n);
    for (size_t i = 0; i < 3; ++i) CHECK(f[i] == doctest::Approx(n[i]).epsilon(1e-10));
  }
}

TEST_CASE("ngram sampling length and vocabulary membership") {
  auto c = make_corpus({{"a", "b", "a", "b", "c"}});
  auto m = NgramModel::fit(c, 1, 1.0);
  Rng rng(3);
  auto t = m->sample("u", 37, rng);
  CHECK(t.length() == 37);
  for (int32_t a : t.actions) {
    CHECK(a >= 0);
    CHECK(static_cast<size_t>(a) < c.vocab->size());
  }
}
