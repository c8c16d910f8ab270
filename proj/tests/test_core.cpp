#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "seqod/corpus.hpp"
#include "seqod/popularity.hpp"
#include "seqod/rng.hpp"
#include "seqod/vocabulary.hpp"

using namespace seqod;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  auto path = std::filesystem::temp_directory_path() / ("seqod_test_" + name);
  std::ofstream out(path);
  out << contents;
  return path;
}

}  // namespace

TEST_CASE("build_vocabulary tallies counts with first-appearance ids") {
  auto v = Vocabulary::build({{"a", "b", "a"}});
  CHECK(v.size() == 2);
  CHECK(v.id_of("a") == 0);
  CHECK(v.id_of("b") == 1);
  CHECK(v.count(0) == 2);
  CHECK(v.count(1) == 1);
  CHECK(v.total_count() == 3);

  auto single = Vocabulary::build({{"a"}, {"a"}});
  CHECK(single.size() == 1);
  CHECK(single.count(0) == 2);

  CHECK_THROWS_WITH_AS(Vocabulary::build({}), doctest::Contains("empty input"),
                       std::invalid_argument);
  CHECK_THROWS(Vocabulary::build({{}, {}}));
}

TEST_CASE("vocabulary file round trip is the identity") {
  auto v = Vocabulary::build({{"rock", "jazz", "metal", "rock"}});
  const auto path = temp_file("vocab.txt", "");
  v.save(path);
  auto loaded = Vocabulary::load(path);
  REQUIRE(loaded.size() == v.size());
  for (size_t i = 0; i < v.size(); ++i)
    CHECK(loaded.token(static_cast<int32_t>(i)) == v.token(static_cast<int32_t>(i)));
  CHECK(loaded.id_of("metal") == v.id_of("metal"));
  std::filesystem::remove(path);
}

TEST_CASE("popularity prior formula") {
  auto v = Vocabulary::from_tokens({"a", "b"}, {3, 1});
  auto p = PopularityPrior::from(v, 1.0);
  CHECK(p.gamma[0] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  CHECK(p.gamma[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));

  // equal counts: uniform for any epsilon
  auto eq = Vocabulary::from_tokens({"a", "b", "c"}, {5, 5, 5});
  for (double eps : {0.1, 1.0, 7.5}) {
    auto pe = PopularityPrior::from(eq, eps);
    for (double g : pe.gamma) CHECK(g == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  // zero counts: smoothing floor gives uniform
  auto zero = Vocabulary::from_tokens({"a", "b", "c", "d"});
  auto pz = PopularityPrior::from(zero, 1.0);
  for (double g : pz.gamma) CHECK(g == doctest::Approx(0.25).epsilon(1e-12));

  CHECK_THROWS_AS(PopularityPrior::from(v, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PopularityPrior::from(v, -1.0), std::invalid_argument);
}

TEST_CASE("popularity prior sums to one for random counts and epsilon") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t n = 1 + rng.below(40);
    std::vector<std::string> tokens(n);
    std::vector<int64_t> counts(n);
    for (size_t i = 0; i < n; ++i) {
      tokens[i] = "t" + std::to_string(i);
      counts[i] = static_cast<int64_t>(rng.below(1000));
    }
    const double eps = rng.uniform(1e-3, 10.0);
    auto p = PopularityPrior::from(Vocabulary::from_tokens(tokens, counts), eps);
    double sum = 0.0;
    for (double g : p.gamma) {
      CHECK(g > 0.0);
      sum += g;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("corpus loading") {
  const auto path = temp_file("corpus.tsv", "u1\ta b a\nu2\tc c b\n");
  auto c = load_corpus(path);
  REQUIRE(c.trajectories.size() == 2);
  CHECK(c.trajectories[0].user == "u1");
  CHECK(c.trajectories[0].actions == std::vector<int32_t>{0, 1, 0});
  CHECK(c.trajectories[1].actions == std::vector<int32_t>{2, 2, 1});
  CHECK(c.vocab->size() == 3);
  CHECK(c.vocab->count(2) == 2);
  CHECK(c.total_actions() == 6);
  std::filesystem::remove(path);

  const auto empty = temp_file("empty.tsv", "");
  CHECK_THROWS_WITH_AS(load_corpus(empty), doctest::Contains("empty input"),
                       std::runtime_error);
  std::filesystem::remove(empty);

  const auto bad = temp_file("bad.tsv", "u1\ta b\nno-tab-here\n");
  CHECK_THROWS_WITH_AS(load_corpus(bad), doctest::Contains("line 2"), std::runtime_error);
  std::filesystem::remove(bad);
}

TEST_CASE("unknown token under a fixed vocabulary is a hard error") {
  auto vocab = std::make_shared<Vocabulary>(Vocabulary::from_tokens({"a", "b"}));
  const auto path = temp_file("fixed.tsv", "u1\ta b zzz\n");
  CHECK_THROWS_WITH_AS(load_corpus(path, vocab), doctest::Contains("zzz"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("corpus save/load round trip") {
  const auto path = temp_file("rt.tsv", "u1\ta b a\nu9\tb b b\n");
  auto c = load_corpus(path);
  const auto path2 = std::filesystem::temp_directory_path() / "seqod_test_rt2.tsv";
  save_corpus(c, path2);
  auto c2 = load_corpus(path2);
  REQUIRE(c2.trajectories.size() == c.trajectories.size());
  for (size_t i = 0; i < c.trajectories.size(); ++i) {
    CHECK(c2.trajectories[i].user == c.trajectories[i].user);
    CHECK(c2.trajectories[i].actions == c.trajectories[i].actions);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("per-user split is disjoint and keeps one training trajectory") {
  Corpus c;
  c.vocab = std::make_shared<Vocabulary>(Vocabulary::from_tokens({"a"}));
  for (int i = 0; i < 7; ++i)
    c.trajectories.push_back({"u1", {0, 0}});
  c.trajectories.push_back({"u2", {0}});
  auto s = split_corpus(c, 0.3, 99);
  CHECK(s.train.size() + s.test.size() == 8);
  for (size_t i : s.train)
    CHECK(std::find(s.test.begin(), s.test.end(), i) == s.test.end());
  // u2 has a single trajectory; it must stay in train
  bool u2_in_train = false;
  for (size_t i : s.train) u2_in_train |= c.trajectories[i].user == "u2";
  CHECK(u2_in_train);
}

TEST_CASE("seed derivation separates labels and streams") {
  CHECK(derive_seed(1, "fit") != derive_seed(1, "detect"));
  CHECK(derive_seed(1, "detect", 0, 1) != derive_seed(1, "detect", 1, 0));
  CHECK(derive_seed(1, "detect", 5, 2) == derive_seed(1, "detect", 5, 2));
  CHECK(derive_seed(1, "x") != derive_seed(2, "x"));
}
