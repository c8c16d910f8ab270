#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "seqod/corpus.hpp"
#include "seqod/models/hmm.hpp"

namespace seqod {

struct InjectionRecord {
  size_t trajectory = 0;  // index into the corpus
  std::vector<size_t> positions;
  std::vector<int32_t> originals;
  std::vector<int32_t> injected;
};

using ClusterLabels = std::map<std::string, size_t>;  // user -> cluster

// Random cluster HMMs over one shared vocabulary: cluster k's states emit
// mostly inside the k-th vocabulary block (leak mass spread uniformly), so
// clusters have distinctive supports the way user groups do. Lower emission
// concentration gives spikier per-state rows and a heavier-tailed cluster
// frequency profile.
std::vector<std::unique_ptr<HmmModel>> make_cluster_hmms(
    std::shared_ptr<const Vocabulary> vocab, size_t n_clusters, size_t n_states,
    double leak, uint64_t seed, double emission_concentration = 1.0);

struct ClusterCorpusSpec {
  size_t users_per_cluster = 20;
  size_t trajectories_per_user = 1;
  size_t length = 50;
  std::string user_prefix = "u";
};

std::pair<Corpus, ClusterLabels> generate_cluster_hmm_corpus(
    const std::vector<const HmmModel*>& cluster_hmms, const ClusterCorpusSpec& spec,
    uint64_t seed);

// Replaces ceil(rate * T) positions per trajectory with draws from the top_k
// most frequent actions of a uniformly chosen different cluster.
std::pair<Corpus, std::vector<InjectionRecord>> inject_cross_cluster(
    const Corpus& corpus, const ClusterLabels& labels, double rate, size_t top_k,
    uint64_t seed);

// Replacement drawn uniformly from the vocabulary minus the original action.
std::pair<Corpus, std::vector<InjectionRecord>> inject_uniform(const Corpus& corpus,
                                                               double rate,
                                                               uint64_t seed);

std::vector<std::vector<uint8_t>> injection_truth(const Corpus& corpus,
                                                  const std::vector<InjectionRecord>& recs);

void save_injections(const std::vector<InjectionRecord>& recs, const Vocabulary& vocab,
                     const std::filesystem::path& path);
std::vector<InjectionRecord> load_injections(const Vocabulary& vocab,
                                             const std::filesystem::path& path);

void save_labels(const ClusterLabels& labels, const std::filesystem::path& path);
ClusterLabels load_labels(const std::filesystem::path& path);

}  // namespace seqod
