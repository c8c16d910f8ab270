#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "seqod/vocabulary.hpp"

namespace seqod {

struct Trajectory {
  std::string user;
  std::vector<int32_t> actions;

  size_t length() const { return actions.size(); }
};

// A collection of user trajectories over one shared vocabulary.
struct Corpus {
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<Trajectory> trajectories;

  size_t total_actions() const {
    size_t n = 0;
    for (const auto& t : trajectories) n += t.length();
    return n;
  }
};

// File format: UTF-8 text, one trajectory per line,
// `user_id<TAB>token token ...`. With a fixed vocabulary, unknown tokens are
// a hard error (the rank test needs replacements drawn from the same action
// set); otherwise the vocabulary is built from the file in first-appearance
// order.
Corpus load_corpus(const std::filesystem::path& path,
                   std::shared_ptr<const Vocabulary> fixed_vocab = nullptr);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Deterministic per-user split: for each user, roughly `test_fraction` of
// their trajectories (at least one stays in train) go to test, chosen by a
// seed-derived shuffle. Returned vectors index into corpus.trajectories.
struct TrainTestSplit {
  std::vector<size_t> train;
  std::vector<size_t> test;
};
TrainTestSplit split_corpus(const Corpus& corpus, double test_fraction, uint64_t seed);

Corpus subset(const Corpus& corpus, const std::vector<size_t>& indices);

}  // namespace seqod
