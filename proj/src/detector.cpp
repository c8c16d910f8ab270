#include "seqod/detector.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "seqod/kernels.hpp"
#include "seqod/parallel.hpp"

namespace seqod {

std::vector<int32_t> sample_action_set(size_t vocab_size, size_t sample_size,
                                       int32_t forced, Rng& rng) {
  const size_t k = std::min(sample_size, vocab_size);
  std::vector<int32_t> out;
  out.reserve(k);
  if (k == vocab_size) {
    for (size_t a = 0; a < vocab_size; ++a) out.push_back(static_cast<int32_t>(a));
    return out;
  }
  // Floyd's sampling: k distinct ids in O(k) draws.
  std::unordered_set<int32_t> seen;
  seen.reserve(k * 2);
  for (size_t j = vocab_size - k; j < vocab_size; ++j) {
    const auto t = static_cast<int32_t>(rng.below(j + 1));
    const int32_t pick = seen.insert(t).second ? t : static_cast<int32_t>(j);
    if (pick != t) seen.insert(pick);
    out.push_back(pick);
  }
  if (!seen.contains(forced)) out[rng.below(k)] = forced;
  return out;
}

double replacement_score(const NullModel& model, const PopularityPrior& prior,
                         const Trajectory& x, size_t j, int32_t a) {
  double out;
  model.replacement_log_scores(x, j, {&a, 1}, {&out, 1});
  return out - prior.log_gamma[static_cast<size_t>(a)];
}

namespace {

ActionResult test_position(ReplacementScorer& scorer, const PopularityPrior& prior,
                           const Trajectory& x, size_t j, size_t sample_size,
                           double tie_tolerance, Rng& rng) {
  const size_t n = prior.gamma.size();
  const int32_t observed = x.actions[j];
  auto candidates = sample_action_set(n, sample_size, observed, rng);

  std::vector<double> scores(candidates.size());
  scorer.scores(j, candidates, scores);
  double observed_score = 0.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    scores[i] -= prior.log_gamma[static_cast<size_t>(candidates[i])];
    if (candidates[i] == observed) observed_score = scores[i];
  }

  // Conservative tie rule: scores within the tolerance of the observed one
  // count toward the rank, pushing the decision toward NORMAL.
  const size_t rank = kernels::count_le(scores.data(), scores.size(),
                                        observed_score + tie_tolerance);

  ActionResult r;
  r.position = j;
  r.token = observed;
  r.score = observed_score;
  r.rank = rank;
  r.pvalue = static_cast<double>(rank) / static_cast<double>(candidates.size());
  return r;
}

}  // namespace

double action_pvalue(const NullModel& model, const PopularityPrior& prior,
                     const Trajectory& x, size_t j, size_t sample_size, Rng& rng,
                     double tie_tolerance) {
  auto scorer = model.make_replacement_scorer(x);
  return test_position(*scorer, prior, x, j, sample_size, tie_tolerance, rng).pvalue;
}

DetectionReport detect(const Trajectory& x, const NullModel& model,
                       const PopularityPrior& prior, const DetectorConfig& config) {
  DetectionReport report;
  report.user = x.user;
  report.actions.resize(x.length());
  auto scorer = model.make_replacement_scorer(x);
  for (size_t j = 0; j < x.length(); ++j) {
    Rng rng(derive_seed(config.seed, "detect", hash_string(x.user), j));
    auto r = test_position(*scorer, prior, x, j, config.sample_size,
                           config.tie_tolerance, rng);
    r.outlier = r.pvalue <= config.beta;
    report.actions[j] = r;
  }
  return report;
}

std::vector<DetectionReport> detect_corpus(const Corpus& corpus, const NullModel& model,
                                           const PopularityPrior& prior,
                                           const DetectorConfig& config,
                                           unsigned threads) {
  std::vector<DetectionReport> reports(corpus.trajectories.size());
  parallel_for(corpus.trajectories.size(), threads, [&](size_t i) {
    reports[i] = detect(corpus.trajectories[i], model, prior, config);
  });
  return reports;
}

double sampling_bound(size_t sample_size, double eps) {
  if (eps < 0.0) throw std::invalid_argument("sampling_bound: eps must be >= 0");
  return std::exp(-2.0 * eps * eps * static_cast<double>(sample_size));
}

void write_reports_csv(std::ostream& out, const std::vector<DetectionReport>& reports,
                       const Vocabulary& vocab) {
  out << "user,position,token,score,rank,pvalue,decision\n";
  for (const auto& rep : reports) {
    for (const auto& a : rep.actions) {
      out << rep.user << ',' << a.position << ',' << vocab.token(a.token) << ','
          << a.score << ',' << a.rank << ',' << a.pvalue << ','
          << (a.outlier ? "OUTLIER" : "NORMAL") << '\n';
    }
  }
}

}  // namespace seqod
