#include "seqod/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "seqod/rng.hpp"

namespace seqod {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path,
                   std::shared_ptr<const Vocabulary> fixed_vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("corpus: cannot open " + path.string());

  std::vector<std::string> users;
  std::vector<std::vector<std::string>> token_seqs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("corpus: malformed line " + std::to_string(lineno) +
                               " in " + path.string() + " (missing TAB)");
    std::string user = line.substr(0, tab);
    auto toks = split_ws(line.substr(tab + 1));
    if (user.empty() || toks.empty())
      throw std::runtime_error("corpus: malformed line " + std::to_string(lineno) +
                               " in " + path.string());
    users.push_back(std::move(user));
    token_seqs.push_back(std::move(toks));
  }
  if (token_seqs.empty()) throw std::runtime_error("corpus: empty input " + path.string());

  Corpus c;
  if (fixed_vocab) {
    // Tally counts of this file against the fixed token set.
    std::vector<int64_t> counts(fixed_vocab->size(), 0);
    c.trajectories.reserve(token_seqs.size());
    for (size_t i = 0; i < token_seqs.size(); ++i) {
      Trajectory t;
      t.user = users[i];
      t.actions.reserve(token_seqs[i].size());
      for (const auto& tok : token_seqs[i]) {
        auto id = fixed_vocab->find(tok);
        if (!id)
          throw std::runtime_error("corpus: unknown token '" + tok + "' at line " +
                                   std::to_string(i + 1));
        t.actions.push_back(*id);
        ++counts[static_cast<size_t>(*id)];
      }
      c.trajectories.push_back(std::move(t));
    }
    c.vocab = std::make_shared<Vocabulary>(fixed_vocab->with_counts(std::move(counts)));
  } else {
    auto vocab = std::make_shared<Vocabulary>(Vocabulary::build(token_seqs));
    c.vocab = vocab;
    c.trajectories.reserve(token_seqs.size());
    for (size_t i = 0; i < token_seqs.size(); ++i) {
      Trajectory t;
      t.user = users[i];
      t.actions.reserve(token_seqs[i].size());
      for (const auto& tok : token_seqs[i]) t.actions.push_back(vocab->id_of(tok));
      c.trajectories.push_back(std::move(t));
    }
  }
  return c;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("corpus: cannot write " + path.string());
  for (const auto& t : corpus.trajectories) {
    out << t.user;
    char sep = '\t';
    for (int32_t a : t.actions) {
      out << sep << corpus.vocab->token(a);
      sep = ' ';
    }
    out << '\n';
  }
}

TrainTestSplit split_corpus(const Corpus& corpus, double test_fraction, uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("split_corpus: test_fraction must be in [0,1)");
  std::map<std::string, std::vector<size_t>> by_user;
  for (size_t i = 0; i < corpus.trajectories.size(); ++i)
    by_user[corpus.trajectories[i].user].push_back(i);

  TrainTestSplit s;
  for (auto& [user, idxs] : by_user) {
    Rng rng(derive_seed(seed, "split", hash_string(user)));
    std::vector<size_t> order = idxs;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    size_t n_test = static_cast<size_t>(test_fraction * static_cast<double>(order.size()));
    n_test = std::min(n_test, order.size() - 1);  // keep at least one in train
    for (size_t i = 0; i < order.size(); ++i)
      (i < n_test ? s.test : s.train).push_back(order[i]);
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Corpus subset(const Corpus& corpus, const std::vector<size_t>& indices) {
  Corpus out;
  out.vocab = corpus.vocab;
  out.trajectories.reserve(indices.size());
  for (size_t i : indices) out.trajectories.push_back(corpus.trajectories.at(i));
  return out;
}

}  // namespace seqod
