#include "seqod/eval/bench.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <stdexcept>

#include "seqod/detector.hpp"
#include "seqod/models/bag.hpp"
#include "seqod/models/hmm.hpp"
#include "seqod/models/ngram.hpp"
#include "seqod/models/switching_flow.hpp"

namespace seqod {

namespace {

Corpus synthetic_corpus(size_t omega, uint64_t seed) {
  std::vector<std::string> tokens(omega);
  for (size_t a = 0; a < omega; ++a) tokens[a] = "a" + std::to_string(a);
  // Markov-ish data: biased next-token choice among a small neighborhood,
  // occasional uniform hop, so fitted models are non-degenerate.
  Corpus c;
  std::vector<std::vector<std::string>> seqs;
  Rng rng(derive_seed(seed, "bench-corpus"));
  const size_t n_users = 40, len = 200;
  std::vector<std::vector<int32_t>> raw;
  for (size_t u = 0; u < n_users; ++u) {
    std::vector<int32_t> s;
    s.push_back(static_cast<int32_t>(rng.below(omega)));
    for (size_t t = 1; t < len; ++t) {
      if (rng.bernoulli(0.2)) {
        s.push_back(static_cast<int32_t>(rng.below(omega)));
      } else {
        const auto hop = static_cast<int32_t>(rng.below(8));
        s.push_back(static_cast<int32_t>(
            (static_cast<size_t>(s.back() + hop)) % omega));
      }
    }
    raw.push_back(std::move(s));
  }
  auto vocab = std::make_shared<Vocabulary>([&] {
    std::vector<int64_t> counts(omega, 0);
    for (const auto& s : raw)
      for (int32_t a : s) ++counts[static_cast<size_t>(a)];
    return Vocabulary::from_tokens(tokens, counts);
  }());
  c.vocab = vocab;
  for (size_t u = 0; u < raw.size(); ++u) {
    Trajectory t;
    t.user = "u" + std::to_string(u);
    t.actions = std::move(raw[u]);
    c.trajectories.push_back(std::move(t));
  }
  return c;
}

std::unique_ptr<NullModel> fit_kind(const std::string& kind, const Corpus& corpus,
                                    uint64_t seed) {
  if (kind == "bag") return BagOfActionsModel::fit(corpus);
  if (kind == "ngram") return NgramModel::fit(corpus, 1);
  if (kind == "hmm") {
    HmmModel::FitOptions opt;
    opt.n_states = 10;
    opt.max_iters = 15;
    opt.restarts = 1;
    opt.seed = seed;
    return HmmModel::fit(corpus, opt);
  }
  if (kind == "switchingflow") {
    SwitchingFlowOptions opt;
    opt.n_envs = 5;
    opt.q = 0.2;
    opt.burn_in = 20;
    opt.n_retained = 20;
    opt.seed = seed;
    return SwitchingFlowModel::fit(corpus, opt);
  }
  throw std::invalid_argument("bench: unknown model kind '" + kind + "'");
}

double time_detection(const NullModel& model, const PopularityPrior& prior,
                      const Trajectory& x, size_t sample_size, size_t reps,
                      uint64_t seed) {
  DetectorConfig cfg;
  cfg.sample_size = sample_size;
  cfg.seed = seed;
  cfg.beta = 0.05;
  std::vector<double> times;
  times.reserve(reps);
  for (size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    volatile double sink = detect(x, model, prior, cfg).actions[0].pvalue;
    (void)sink;
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

}  // namespace

std::vector<BenchRow> bench_runtime(const BenchSpec& spec) {
  std::vector<BenchRow> rows;
  for (size_t omega : spec.omegas) {
    Corpus corpus = synthetic_corpus(omega, spec.seed);
    const auto prior = PopularityPrior::from(*corpus.vocab);
    Rng rng(derive_seed(spec.seed, "bench-test-seq", omega));
    for (const auto& kind : spec.kinds) {
      auto model = fit_kind(kind, corpus, derive_seed(spec.seed, "bench-fit", omega));
      const Trajectory x = model->sample("u0", spec.seq_length, rng);
      rows.push_back({kind, omega, true,
                      time_detection(*model, prior, x, spec.sample_size, spec.reps,
                                     derive_seed(spec.seed, "bench-s", omega))});
      rows.push_back({kind, omega, false,
                      time_detection(*model, prior, x, omega, spec.reps,
                                     derive_seed(spec.seed, "bench-f", omega))});
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "model,omega,sampled,seconds\n";
  for (const auto& r : rows)
    out << r.model << ',' << r.omega << ',' << (r.sampled ? 1 : 0) << ','
        << r.seconds << '\n';
}

}  // namespace seqod
