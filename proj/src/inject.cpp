#include "seqod/eval/inject.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace seqod {

std::vector<std::unique_ptr<HmmModel>> make_cluster_hmms(
    std::shared_ptr<const Vocabulary> vocab, size_t n_clusters, size_t n_states,
    double leak, uint64_t seed, double emission_concentration) {
  const size_t n = vocab->size();
  if (n_clusters < 1 || n_clusters > n)
    throw std::invalid_argument("make_cluster_hmms: bad cluster count");
  if (emission_concentration <= 0.0)
    throw std::invalid_argument("make_cluster_hmms: concentration must be positive");
  std::vector<std::unique_ptr<HmmModel>> out;
  const size_t block = n / n_clusters;
  for (size_t k = 0; k < n_clusters; ++k) {
    Rng rng(derive_seed(seed, "cluster-hmm", k));
    const size_t lo = k * block;
    const size_t hi = (k + 1 == n_clusters) ? n : lo + block;
    std::vector<double> pi(n_states), trans(n_states * n_states), emit(n_states * n, 0.0);
    const std::vector<double> ones(n_states, 1.0);
    pi = rng.dirichlet(ones);
    for (size_t i = 0; i < n_states; ++i)
      rng.dirichlet(ones, {trans.data() + i * n_states, n_states});
    const std::vector<double> block_ones(hi - lo, emission_concentration);
    std::vector<double> within(hi - lo);
    for (size_t i = 0; i < n_states; ++i) {
      rng.dirichlet(block_ones, within);
      double* row = emit.data() + i * n;
      for (size_t a = 0; a < n; ++a) row[a] = leak / static_cast<double>(n);
      for (size_t a = lo; a < hi; ++a) row[a] += (1.0 - leak) * within[a - lo];
    }
    out.push_back(std::make_unique<HmmModel>(vocab, n_states, std::move(pi),
                                             std::move(trans), std::move(emit)));
  }
  return out;
}

std::pair<Corpus, ClusterLabels> generate_cluster_hmm_corpus(
    const std::vector<const HmmModel*>& cluster_hmms, const ClusterCorpusSpec& spec,
    uint64_t seed) {
  if (cluster_hmms.empty())
    throw std::invalid_argument("generate_cluster_hmm_corpus: no cluster models");
  Corpus corpus;
  const auto base_vocab = cluster_hmms[0]->shared_vocabulary();
  ClusterLabels labels;
  std::vector<int64_t> counts(base_vocab->size(), 0);
  for (size_t k = 0; k < cluster_hmms.size(); ++k) {
    for (size_t u = 0; u < spec.users_per_cluster; ++u) {
      const std::string user =
          spec.user_prefix + "c" + std::to_string(k) + "_" + std::to_string(u);
      labels[user] = k;
      for (size_t rep = 0; rep < spec.trajectories_per_user; ++rep) {
        Rng rng(derive_seed(seed, "cluster-corpus", hash_string(user), rep));
        auto t = cluster_hmms[k]->sample(user, spec.length, rng);
        for (int32_t a : t.actions) ++counts[static_cast<size_t>(a)];
        corpus.trajectories.push_back(std::move(t));
      }
    }
  }
  corpus.vocab = std::make_shared<Vocabulary>(base_vocab->with_counts(std::move(counts)));
  return {std::move(corpus), std::move(labels)};
}

namespace {

std::vector<size_t> distinct_positions(size_t t_len, size_t n_pick, Rng& rng) {
  std::vector<size_t> idx(t_len);
  for (size_t i = 0; i < t_len; ++i) idx[i] = i;
  for (size_t i = 0; i < n_pick; ++i)
    std::swap(idx[i], idx[i + rng.below(t_len - i)]);
  idx.resize(n_pick);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::pair<Corpus, std::vector<InjectionRecord>> inject_cross_cluster(
    const Corpus& corpus, const ClusterLabels& labels, double rate, size_t top_k,
    uint64_t seed) {
  if (!(rate > 0.0) || rate >= 1.0)
    throw std::invalid_argument("inject_cross_cluster: rate must be in (0, 1)");
  size_t n_clusters = 0;
  for (const auto& [user, k] : labels) n_clusters = std::max(n_clusters, k + 1);
  if (n_clusters < 2)
    throw std::invalid_argument("inject_cross_cluster: need at least two clusters");

  // Per-cluster token frequencies from this corpus, then each cluster's
  // top_k token set.
  const size_t n = corpus.vocab->size();
  std::vector<std::vector<int64_t>> freq(n_clusters, std::vector<int64_t>(n, 0));
  for (const auto& t : corpus.trajectories) {
    auto it = labels.find(t.user);
    if (it == labels.end())
      throw std::invalid_argument("inject_cross_cluster: no label for user " + t.user);
    for (int32_t a : t.actions) ++freq[it->second][static_cast<size_t>(a)];
  }
  std::vector<std::vector<int32_t>> top(n_clusters);
  for (size_t k = 0; k < n_clusters; ++k) {
    std::vector<int32_t> ids(n);
    for (size_t a = 0; a < n; ++a) ids[a] = static_cast<int32_t>(a);
    std::stable_sort(ids.begin(), ids.end(), [&](int32_t x, int32_t y) {
      return freq[k][static_cast<size_t>(x)] > freq[k][static_cast<size_t>(y)];
    });
    ids.resize(std::min(top_k, ids.size()));
    top[k] = std::move(ids);
  }

  Corpus out = corpus;
  std::vector<InjectionRecord> recs;
  for (size_t i = 0; i < out.trajectories.size(); ++i) {
    auto& traj = out.trajectories[i];
    const size_t own = labels.at(traj.user);
    Rng rng(derive_seed(seed, "inject-cross", hash_string(traj.user), i));
    const auto n_inj = static_cast<size_t>(
        std::ceil(rate * static_cast<double>(traj.length())));
    InjectionRecord rec;
    rec.trajectory = i;
    for (size_t pos : distinct_positions(traj.length(), n_inj, rng)) {
      const int32_t original = traj.actions[pos];
      int32_t repl = original;
      for (int attempt = 0; attempt < 64 && repl == original; ++attempt) {
        size_t other = rng.below(n_clusters - 1);
        if (other >= own) ++other;
        repl = top[other][rng.below(top[other].size())];
      }
      if (repl == original)
        throw std::runtime_error("inject_cross_cluster: cannot find a replacement");
      traj.actions[pos] = repl;
      rec.positions.push_back(pos);
      rec.originals.push_back(original);
      rec.injected.push_back(repl);
    }
    recs.push_back(std::move(rec));
  }
  return {std::move(out), std::move(recs)};
}

std::pair<Corpus, std::vector<InjectionRecord>> inject_uniform(const Corpus& corpus,
                                                               double rate,
                                                               uint64_t seed) {
  if (!(rate > 0.0) || rate >= 1.0)
    throw std::invalid_argument("inject_uniform: rate must be in (0, 1)");
  const size_t n = corpus.vocab->size();
  if (n < 2) throw std::invalid_argument("inject_uniform: vocabulary too small");

  Corpus out = corpus;
  std::vector<InjectionRecord> recs;
  for (size_t i = 0; i < out.trajectories.size(); ++i) {
    auto& traj = out.trajectories[i];
    Rng rng(derive_seed(seed, "inject-uniform", hash_string(traj.user), i));
    const auto n_inj = static_cast<size_t>(
        std::ceil(rate * static_cast<double>(traj.length())));
    InjectionRecord rec;
    rec.trajectory = i;
    for (size_t pos : distinct_positions(traj.length(), n_inj, rng)) {
      const int32_t original = traj.actions[pos];
      auto repl = static_cast<int32_t>(rng.below(n - 1));
      if (repl >= original) ++repl;
      traj.actions[pos] = repl;
      rec.positions.push_back(pos);
      rec.originals.push_back(original);
      rec.injected.push_back(repl);
    }
    recs.push_back(std::move(rec));
  }
  return {std::move(out), std::move(recs)};
}

std::vector<std::vector<uint8_t>> injection_truth(
    const Corpus& corpus, const std::vector<InjectionRecord>& recs) {
  std::vector<std::vector<uint8_t>> truth(corpus.trajectories.size());
  for (size_t i = 0; i < corpus.trajectories.size(); ++i)
    truth[i].assign(corpus.trajectories[i].length(), 0);
  for (const auto& rec : recs)
    for (size_t pos : rec.positions) truth.at(rec.trajectory).at(pos) = 1;
  return truth;
}

void save_injections(const std::vector<InjectionRecord>& recs, const Vocabulary& vocab,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("injections: cannot write " + path.string());
  out << "trajectory,position,original,injected\n";
  for (const auto& rec : recs)
    for (size_t i = 0; i < rec.positions.size(); ++i)
      out << rec.trajectory << ',' << rec.positions[i] << ','
          << vocab.token(rec.originals[i]) << ',' << vocab.token(rec.injected[i])
          << '\n';
}

std::vector<InjectionRecord> load_injections(const Vocabulary& vocab,
                                             const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("injections: cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::map<size_t, InjectionRecord> by_traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string traj, pos, orig, inj;
    if (!std::getline(ss, traj, ',') || !std::getline(ss, pos, ',') ||
        !std::getline(ss, orig, ',') || !std::getline(ss, inj, ','))
      throw std::runtime_error("injections: malformed line in " + path.string());
    auto& rec = by_traj[std::stoull(traj)];
    rec.trajectory = std::stoull(traj);
    rec.positions.push_back(std::stoull(pos));
    rec.originals.push_back(vocab.id_of(orig));
    rec.injected.push_back(vocab.id_of(inj));
  }
  std::vector<InjectionRecord> recs;
  for (auto& [_, rec] : by_traj) recs.push_back(std::move(rec));
  return recs;
}

void save_labels(const ClusterLabels& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("labels: cannot write " + path.string());
  out << "user,cluster\n";
  for (const auto& [user, k] : labels) out << user << ',' << k << '\n';
}

ClusterLabels load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("labels: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  ClusterLabels labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw std::runtime_error("labels: malformed line in " + path.string());
    labels[line.substr(0, comma)] = std::stoull(line.substr(comma + 1));
  }
  return labels;
}

}  // namespace seqod
