#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "seqod/eval/baselines.hpp"
#include "seqod/eval/inject.hpp"
#include "seqod/eval/metrics.hpp"

using namespace seqod;

TEST_CASE("precision/recall/F1") {
  CHECK(prf1({1, 1, 0}, {1, 1, 0}).f1 == 1.0);

  auto none = prf1({0, 0, 0}, {1, 0, 1});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  // TP=8, FP=2, FN=2
  std::vector<uint8_t> d, t;
  for (int i = 0; i < 8; ++i) { d.push_back(1); t.push_back(1); }
  for (int i = 0; i < 2; ++i) { d.push_back(1); t.push_back(0); }
  for (int i = 0; i < 2; ++i) { d.push_back(0); t.push_back(1); }
  auto r = prf1(d, t);
  CHECK(r.precision == doctest::Approx(0.8));
  CHECK(r.recall == doctest::Approx(0.8));
  CHECK(r.f1 == doctest::Approx(0.8));

  CHECK_THROWS_AS(prf1({1}, {1, 0}), std::invalid_argument);
}

TEST_CASE("F1 is the harmonic mean of precision and recall") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<uint8_t> d(50), t(50);
    for (auto& x : d) x = rng.bernoulli(0.4) ? 1 : 0;
    for (auto& x : t) x = rng.bernoulli(0.3) ? 1 : 0;
    auto r = prf1(d, t);
    if (r.precision + r.recall > 0) {
      CHECK(r.f1 == doctest::Approx(2 * r.precision * r.recall /
                                    (r.precision + r.recall)));
    } else {
      CHECK(r.f1 == 0.0);
    }
  }
}

TEST_CASE("fisher exact test") {
  SUBCASE("independent table with balanced margins") {
    CHECK(fisher_exact({5, 5, 5, 5}) == doctest::Approx(1.0));
    CHECK(fisher_exact({2, 4, 3, 6}) == doctest::Approx(1.0));  // proportional rows
  }
  SUBCASE("extreme diagonal is near zero") {
    CHECK(fisher_exact({15, 0, 0, 15}) < 1e-6);
  }
  SUBCASE("zero margins give 1 by convention") {
    CHECK(fisher_exact({0, 0, 3, 4}) == 1.0);
    CHECK(fisher_exact({3, 4, 0, 0}) == 1.0);
    CHECK(fisher_exact({0, 3, 0, 4}) == 1.0);
    CHECK(fisher_exact({3, 0, 4, 0}) == 1.0);
  }
  SUBCASE("matches the exhaustive integer oracle for margins up to 30") {
    Rng rng(2);
    for (int trial = 0; trial < 400; ++trial) {
      ContingencyTable t;
      t.ot = static_cast<int64_t>(rng.below(16));
      t.of = static_cast<int64_t>(rng.below(16));
      t.nt = static_cast<int64_t>(rng.below(16));
      t.nf = static_cast<int64_t>(rng.below(16));
      if (t.total() == 0) continue;
      const double expect = oracle::fisher_exact_small(t.ot, t.of, t.nt, t.nf);
      CHECK(fisher_exact(t) == doctest::Approx(expect).epsilon(1e-12));
    }
    // every 2x2 with row sums exactly 15+15 (margins 30)
    for (int64_t ot = 0; ot <= 15; ++ot) {
      for (int64_t nt = 0; nt <= 15; ++nt) {
        ContingencyTable t{ot, 15 - ot, nt, 15 - nt};
        const double expect = oracle::fisher_exact_small(t.ot, t.of, t.nt, t.nf);
        CHECK(fisher_exact(t) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("bayesian p-value directionality") {
  BayesianTestConfig cfg{1.0, 100000};
  SUBCASE("outliers enriched in true relations pushes the p-value to zero") {
    Rng rng(3);
    CHECK(bayesian_pvalue({40, 10, 20, 80}, cfg, rng) < 0.01);
  }
  SUBCASE("proportional tables sit near one half") {
    Rng rng(4);
    const double p = bayesian_pvalue({20, 60, 20, 60}, cfg, rng);
    CHECK(p > 0.4);
    CHECK(p < 0.6);
  }
  SUBCASE("truth-inverted flags: bayesian large while fisher small") {
    // flags concentrate on false relations -> dependence, wrong direction
    ContingencyTable t{2, 48, 48, 2};
    Rng rng(5);
    CHECK(fisher_exact(t) < 0.05);
    CHECK(bayesian_pvalue(t, cfg, rng) > 0.5);
  }
  SUBCASE("monte-carlo stability across seeds") {
    Rng r1(6), r2(7);
    const double p1 = bayesian_pvalue({30, 20, 25, 25}, cfg, r1);
    const double p2 = bayesian_pvalue({30, 20, 25, 25}, cfg, r2);
    CHECK(std::abs(p1 - p2) < 0.01);  // well over 2 MC standard errors
  }
  SUBCASE("raising the outlier-true cell never raises the p-value") {
    Rng rng(8);
    double prev = 1.1;
    for (int64_t ot : {10, 20, 30, 40}) {
      const double p = bayesian_pvalue({ot, 50 - ot, 25, 25}, cfg, rng);
      CHECK(p < prev + 0.02);
      prev = p;
    }
  }
}

namespace {

Corpus clustered_corpus(ClusterLabels* labels, uint64_t seed) {
  std::vector<std::string> tokens(40);
  for (size_t i = 0; i < 40; ++i) tokens[i] = "a" + std::to_string(i);
  auto vocab = std::make_shared<Vocabulary>(Vocabulary::from_tokens(tokens));
  auto hmms = make_cluster_hmms(vocab, 2, 3, 0.02, seed);
  std::vector<const HmmModel*> ptrs{hmms[0].get(), hmms[1].get()};
  ClusterCorpusSpec spec;
  spec.users_per_cluster = 5;
  spec.trajectories_per_user = 2;
  spec.length = 25;
  auto [corpus, lab] = generate_cluster_hmm_corpus(ptrs, spec, seed + 1);
  if (labels) *labels = lab;
  return corpus;
}

}  // namespace

TEST_CASE("cluster corpus generation") {
  ClusterLabels labels;
  auto corpus = clustered_corpus(&labels, 9);
  CHECK(corpus.trajectories.size() == 2 * 5 * 2);
  CHECK(labels.size() == 10);
  // vocabulary counts are tallied from the generated corpus
  CHECK(static_cast<size_t>(corpus.vocab->total_count()) == corpus.total_actions());
  // disjoint-ish supports: cluster-0 users emit mostly in the first block
  size_t in_block = 0, total = 0;
  for (const auto& t : corpus.trajectories) {
    const size_t cluster = labels.at(t.user);
    for (int32_t a : t.actions) {
      const bool first_block = a < 20;
      in_block += (cluster == 0) == first_block ? 1 : 0;
      ++total;
    }
  }
  CHECK(static_cast<double>(in_block) / static_cast<double>(total) > 0.9);
}

TEST_CASE("cross-cluster injection") {
  ClusterLabels labels;
  auto corpus = clustered_corpus(&labels, 10);
  auto [injected, recs] = inject_cross_cluster(corpus, labels, 0.08, 10, 33);

  REQUIRE(recs.size() == corpus.trajectories.size());
  size_t n_injected = 0;
  for (size_t i = 0; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    // ceil(0.08 * 25) = 2 positions per trajectory
    CHECK(rec.positions.size() == 2);
    n_injected += rec.positions.size();
    CHECK(injected.trajectories[i].length() == corpus.trajectories[i].length());
    std::set<size_t> distinct(rec.positions.begin(), rec.positions.end());
    CHECK(distinct.size() == rec.positions.size());
    for (size_t k = 0; k < rec.positions.size(); ++k) {
      CHECK(rec.injected[k] != rec.originals[k]);
      CHECK(injected.trajectories[i].actions[rec.positions[k]] == rec.injected[k]);
      CHECK(corpus.trajectories[i].actions[rec.positions[k]] == rec.originals[k]);
    }
  }
  CHECK(static_cast<double>(n_injected) / static_cast<double>(corpus.total_actions()) ==
        doctest::Approx(0.08));

  // injected tokens come from the other cluster's frequent set
  std::vector<std::set<int32_t>> cluster_tokens(2);
  for (const auto& t : corpus.trajectories)
    for (int32_t a : t.actions) cluster_tokens[labels.at(t.user)].insert(a);
  for (size_t i = 0; i < recs.size(); ++i) {
    const size_t own = labels.at(corpus.trajectories[i].user);
    for (int32_t a : recs[i].injected)
      CHECK(cluster_tokens[1 - own].contains(a));
  }

  auto truth = injection_truth(injected, recs);
  size_t marked = 0;
  for (const auto& row : truth)
    for (uint8_t v : row) marked += v;
  CHECK(marked == n_injected);

  // single cluster is an error
  ClusterLabels solo;
  for (const auto& [user, _] : labels) solo[user] = 0;
  CHECK_THROWS_AS(inject_cross_cluster(corpus, solo, 0.08, 10, 33),
                  std::invalid_argument);
}

TEST_CASE("uniform injection") {
  ClusterLabels labels;
  auto corpus = clustered_corpus(&labels, 12);
  auto [injected, recs] = inject_uniform(corpus, 0.11, 44);
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].positions.size() == 3);  // ceil(0.11 * 25)
    for (size_t k = 0; k < recs[i].positions.size(); ++k) {
      CHECK(recs[i].injected[k] != recs[i].originals[k]);
      CHECK(recs[i].injected[k] >= 0);
      CHECK(static_cast<size_t>(recs[i].injected[k]) < corpus.vocab->size());
    }
  }
  CHECK_THROWS_AS(inject_uniform(corpus, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(inject_uniform(corpus, 1.0, 1), std::invalid_argument);
}

TEST_CASE("injection records round trip through CSV") {
  ClusterLabels labels;
  auto corpus = clustered_corpus(&labels, 13);
  auto [injected, recs] = inject_uniform(corpus, 0.1, 5);
  const auto path = std::filesystem::temp_directory_path() / "seqod_test_inj.csv";
  save_injections(recs, *injected.vocab, path);
  auto loaded = load_injections(*injected.vocab, path);
  REQUIRE(loaded.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) {
    CHECK(loaded[i].trajectory == recs[i].trajectory);
    CHECK(loaded[i].positions == recs[i].positions);
    CHECK(loaded[i].originals == recs[i].originals);
    CHECK(loaded[i].injected == recs[i].injected);
  }
  std::filesystem::remove(path);

  const auto lpath = std::filesystem::temp_directory_path() / "seqod_test_lab.csv";
  save_labels(labels, lpath);
  CHECK(load_labels(lpath) == labels);
  std::filesystem::remove(lpath);
}

TEST_CASE("bag baseline thresholding") {
  Corpus c;
  c.vocab = std::make_shared<Vocabulary>(
      Vocabulary::from_tokens({"a", "b", "c"}, {6, 3, 1}));
  c.trajectories.push_back({"u", {0, 1, 2}});
  auto model = BagOfActionsModel::fit(c, 1.0);
  // probs: a=7/13, b=4/13, c=2/13

  CHECK(baseline_bag_fpr(*model, 0.0) == 0.0);
  CHECK(baseline_bag_fpr(*model, 1e-9) == 0.0);
  CHECK(baseline_bag_fpr(*model, 1.1) == doctest::Approx(1.0));
  CHECK(baseline_bag_fpr(*model, 3.0 / 13.0) == doctest::Approx(2.0 / 13.0));
  CHECK(baseline_bag_fpr(*model, 5.0 / 13.0) == doctest::Approx(6.0 / 13.0));

  auto d = baseline_bag_detect(*model, c.trajectories[0], 3.0 / 13.0);
  CHECK(d == std::vector<uint8_t>{0, 0, 1});

  // threshold chosen for a target FPR stays within it
  for (double alpha : {0.0, 0.1, 0.2, 0.5, 1.0}) {
    const double th = baseline_bag_threshold_for_fpr(*model, alpha);
    CHECK(baseline_bag_fpr(*model, th) <= alpha + 1e-12);
  }
}

TEST_CASE("hmm baseline thresholding") {
  auto vocab = std::make_shared<Vocabulary>(Vocabulary::from_tokens({"a", "b", "c"}));
  std::vector<double> emit = {0.7, 0.2, 0.1};
  HmmModel one(vocab, 1, {1.0}, {1.0}, emit);

  Trajectory x{"u", {0, 1, 2, 0}};
  CHECK(baseline_hmm_detect(one, x, 0.0) == std::vector<uint8_t>{0, 0, 0, 0});
  CHECK(baseline_hmm_detect(one, x, 0.15) == std::vector<uint8_t>{0, 0, 1, 0});

  // a 1-state HMM reduces to bag-style probability thresholding
  Corpus c;
  c.vocab = std::make_shared<Vocabulary>(
      Vocabulary::from_tokens({"a", "b", "c"}, {5, 2, 0}));
  c.trajectories.push_back({"u", {0, 1, 0, 0, 1, 0, 0}});
  auto bag = BagOfActionsModel::fit(c, 1.0);
  std::vector<double> bag_emit = bag->probs();
  HmmModel collapsed(c.vocab, 1, {1.0}, {1.0}, bag_emit);
  for (double th : {0.1, 0.3, 0.6}) {
    CHECK(baseline_hmm_detect(collapsed, c.trajectories[0], th) ==
          baseline_bag_detect(*bag, c.trajectories[0], th));
  }

  // flag rate on self-sampled data is monotone in the threshold
  std::vector<double> pi2 = {0.6, 0.4};
  std::vector<double> trans2 = {0.8, 0.2, 0.3, 0.7};
  std::vector<double> emit2 = {0.6, 0.3, 0.1, 0.1, 0.2, 0.7};
  HmmModel two(vocab, 2, pi2, trans2, emit2);
  double prev = -1.0;
  for (double th : {0.05, 0.15, 0.25, 0.5, 0.8}) {
    const double fpr = baseline_hmm_fpr(two, th, {30, 30}, 40, 77);
    CHECK(fpr >= prev);
    prev = fpr;
  }
  // and the threshold selector respects the target
  for (double alpha : {0.05, 0.2, 0.5}) {
    const double th = baseline_hmm_threshold_for_fpr(two, alpha, {30, 30}, 40, 78);
    CHECK(baseline_hmm_fpr(two, th, {30, 30}, 40, 78) <= alpha + 1e-12);
  }
}
