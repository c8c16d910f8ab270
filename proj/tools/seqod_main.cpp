// seqod: contextual outlier detection in action sequences.
//
// Pipeline: fit a null model on training sequences, calibrate the rejection
// probability beta to a target per-action false-positive rate on simulated
// null data, then detect. inject/evaluate/bench reproduce the synthetic
// benchmarks. All randomness derives from one master seed, so every stage is
// reproducible in isolation and outputs are byte-identical across runs and
// thread counts.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seqod/calibration.hpp"
#include "seqod/detector.hpp"
#include "seqod/eval/baselines.hpp"
#include "seqod/eval/bench.hpp"
#include "seqod/eval/inject.hpp"
#include "seqod/eval/metrics.hpp"
#include "seqod/model_io.hpp"
#include "seqod/models/bag.hpp"
#include "seqod/models/hmm.hpp"
#include "seqod/models/ngram.hpp"
#include "seqod/models/switching_flow.hpp"
#include "seqod/parallel.hpp"

namespace {

using namespace seqod;

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::vector<double> parse_sweep(const std::string& spec) {
  // "start:stop:step" inclusive, or a single value.
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) return {std::stod(spec)};
  const auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw CLI::ValidationError("--sweep-alpha", "expected start:stop:step");
  const double start = std::stod(spec.substr(0, c1));
  const double stop = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
  const double step = std::stod(spec.substr(c2 + 1));
  if (step <= 0.0) throw CLI::ValidationError("--sweep-alpha", "step must be positive");
  std::vector<double> out;
  for (double a = start; a <= stop + 1e-12; a += step) out.push_back(a);
  return out;
}

Corpus filter_min_length(const Corpus& corpus, size_t min_length,
                         std::vector<size_t>* kept = nullptr) {
  Corpus out;
  out.vocab = corpus.vocab;
  for (size_t i = 0; i < corpus.trajectories.size(); ++i) {
    if (corpus.trajectories[i].length() >= min_length) {
      out.trajectories.push_back(corpus.trajectories[i]);
      if (kept) kept->push_back(i);
    }
  }
  return out;
}

struct FitArgs {
  std::string model_kind;
  std::string train_path;
  std::string vocab_path;
  std::string out_path = "model.json";
  std::string report_path;
  double epsilon = 1.0;
  int order = 1;
  size_t states = 10;
  size_t iters = 100;
  int restarts = 5;
  double pseudocount = 1.0;
  size_t envs = 10;
  double q = 0.1;
  std::string q_grid;
  double prior_a = 0.1;
  double prior_r = 1.0;
  double prior_s = 1.0;
  size_t burn_in = 200;
  size_t sweeps = 200;
};

int run_fit(const FitArgs& a, uint64_t master_seed) {
  std::shared_ptr<const Vocabulary> fixed;
  if (!a.vocab_path.empty())
    fixed = std::make_shared<Vocabulary>(Vocabulary::load(a.vocab_path));
  Corpus train = load_corpus(a.train_path, fixed);
  const uint64_t seed = derive_seed(master_seed, "fit");

  std::unique_ptr<NullModel> model;
  std::ostringstream report;
  report << "kind=" << a.model_kind << "\n";
  if (a.model_kind == "bag") {
    model = BagOfActionsModel::fit(train, a.epsilon);
  } else if (a.model_kind == "ngram") {
    model = NgramModel::fit(train, a.order, a.epsilon);
    report << "order=" << a.order << "\n";
  } else if (a.model_kind == "hmm") {
    HmmModel::FitOptions opt;
    opt.n_states = a.states;
    opt.max_iters = a.iters;
    opt.restarts = a.restarts;
    opt.pseudocount = a.pseudocount;
    opt.seed = seed;
    HmmModel::FitReport fr;
    model = HmmModel::fit(train, opt, &fr);
    report << "states=" << a.states << "\nchosen_restart=" << fr.chosen_restart
           << "\ntrain_log_lik=" << fr.train_log_lik
           << "\nholdout_log_lik=" << fr.holdout_log_lik << "\n";
  } else if (a.model_kind == "switchingflow") {
    SwitchingFlowOptions opt;
    opt.n_envs = a.envs;
    opt.q = a.q;
    if (!a.q_grid.empty()) opt.q_grid = parse_grid(a.q_grid);
    opt.priors = {a.prior_a, a.prior_r, a.prior_s};
    opt.burn_in = a.burn_in;
    opt.n_retained = a.sweeps;
    opt.seed = seed;
    SwitchingFlowModel::FitReport fr;
    model = SwitchingFlowModel::fit(train, opt, &fr);
    report << "envs=" << a.envs << "\nchosen_q=" << fr.chosen_q
           << "\nmean_jump_rate=" << fr.mean_jump_rate << "\n";
    for (size_t i = 0; i < fr.grid_holdout_ll.size(); ++i)
      report << "grid_ll_" << i << "=" << fr.grid_holdout_ll[i] << "\n";
  } else {
    throw CLI::ValidationError("--model", "unknown model kind '" + a.model_kind + "'");
  }

  // Held-out per-action log-likelihood of the fitted model on a split of the
  // training file (fit quality indicator for the fit report).
  {
    auto split = split_corpus(train, 0.1, derive_seed(seed, "fit-report-split"));
    Corpus heldout = split.test.empty() ? train : subset(train, split.test);
    double ll = 0.0;
    size_t actions = 0;
    for (const auto& t : heldout.trajectories) {
      ll += model->log_score(t);
      actions += t.length();
    }
    report << "heldout_per_action_ll=" << ll / static_cast<double>(actions) << "\n";
  }

  save_model(*model, a.out_path);
  report << "model_hash=" << model_hash(*model) << "\n";
  if (!a.report_path.empty()) {
    std::ofstream out(a.report_path);
    out << report.str();
  }
  std::cout << "wrote " << a.out_path << " (" << model->kind() << ", |vocab|="
            << model->vocabulary().size() << ")\n";
  return 0;
}

struct CalibrateArgs {
  std::string model_path;
  std::string test_path;
  double alpha = 0.05;
  size_t sample_size = 500;
  size_t n_reps = 10;
  double tol = 0.005;
  size_t max_iter = 30;
  size_t min_length = 9;
  double epsilon = 1.0;
  std::string out_path = "calibration.txt";
};

int run_calibrate(const CalibrateArgs& a, uint64_t master_seed, unsigned threads) {
  auto model = load_model(a.model_path);
  Corpus test = load_corpus(a.test_path, model->shared_vocabulary());
  Corpus usable = filter_min_length(test, a.min_length);
  if (usable.trajectories.empty())
    throw std::runtime_error("calibrate: no test trajectory reaches the minimum length");
  const auto prior = PopularityPrior::from(model->vocabulary(), a.epsilon);
  const uint64_t seed = derive_seed(master_seed, "calibrate");

  auto res = calibrate_beta(*model, prior, a.alpha, a.sample_size,
                            user_lengths_of(usable), a.n_reps, a.tol, a.max_iter, seed,
                            threads);

  CalibrationRecord rec;
  rec.alpha = res.alpha;
  rec.beta = res.beta;
  rec.achieved_fpr = res.achieved_fpr;
  rec.n_actions = res.n_actions;
  rec.iterations = res.iterations;
  rec.sample_size = a.sample_size;
  rec.seed = seed;
  rec.model_hash = model_hash(*model);
  save_calibration(rec, a.out_path);
  std::cout << "beta=" << rec.beta << " achieved_fpr=" << rec.achieved_fpr
            << " n_actions=" << rec.n_actions << "\n";
  return 0;
}

struct DetectArgs {
  std::string model_path;
  std::string calib_path;
  std::string test_path;
  std::string out_path = "detections.csv";
  double beta = -1.0;  // overrides the calibration record when set
  size_t sample_size = 500;
  size_t min_length = 9;
  double epsilon = 1.0;
};

int run_detect(const DetectArgs& a, uint64_t master_seed, unsigned threads) {
  auto model = load_model(a.model_path);
  DetectorConfig cfg;
  cfg.sample_size = a.sample_size;
  if (!a.calib_path.empty()) {
    const auto rec = load_calibration(a.calib_path);
    if (rec.model_hash != model_hash(*model))
      throw std::runtime_error("detect: calibration record was made for a different model "
                               "(hash mismatch)");
    cfg.beta = rec.beta;
    cfg.sample_size = rec.sample_size;
  }
  if (a.beta >= 0.0) cfg.beta = a.beta;
  cfg.seed = derive_seed(master_seed, "detect");

  Corpus test = load_corpus(a.test_path, model->shared_vocabulary());
  Corpus usable = filter_min_length(test, a.min_length);
  const auto prior = PopularityPrior::from(model->vocabulary(), a.epsilon);
  auto reports = detect_corpus(usable, *model, prior, cfg, threads);

  std::ofstream out(a.out_path);
  if (!out) throw std::runtime_error("detect: cannot write " + a.out_path);
  write_reports_csv(out, reports, model->vocabulary());
  size_t flagged = 0, total = 0;
  for (const auto& r : reports) {
    total += r.actions.size();
    for (const auto& act : r.actions) flagged += act.outlier ? 1 : 0;
  }
  std::cout << "beta=" << cfg.beta << " flagged=" << flagged << "/" << total << "\n";
  return 0;
}

struct InjectArgs {
  std::string corpus_path;
  std::string mode = "uniform";
  double rate = 0.1;
  size_t top_k = 200;
  std::string labels_path;
  std::string out_path = "injected.tsv";
  std::string records_path = "injections.csv";
  // Synthetic cluster-HMM generation (stand-in for the clustered real data).
  size_t gen_clusters = 0;
  size_t gen_states = 10;
  size_t gen_users = 20;
  size_t gen_train_trajs = 4;
  size_t gen_train_length = 100;
  size_t gen_test_length = 25;
  double gen_leak = 0.05;
  std::string gen_train_out;
  std::string gen_labels_out;
};

int run_inject(const InjectArgs& a, uint64_t master_seed) {
  const uint64_t seed = derive_seed(master_seed, "inject");
  Corpus corpus;
  ClusterLabels labels;

  if (a.gen_clusters > 0) {
    // Build cluster HMMs over a fresh vocabulary, then train + test corpora.
    const size_t vocab_size = std::max<size_t>(a.gen_clusters * 10, 100);
    std::vector<std::string> tokens(vocab_size);
    for (size_t i = 0; i < vocab_size; ++i) tokens[i] = "a" + std::to_string(i);
    auto vocab = std::make_shared<Vocabulary>(Vocabulary::from_tokens(tokens));
    auto hmms = make_cluster_hmms(vocab, a.gen_clusters, a.gen_states, a.gen_leak,
                                  derive_seed(seed, "gen-hmms"));
    std::vector<const HmmModel*> ptrs;
    for (const auto& h : hmms) ptrs.push_back(h.get());

    ClusterCorpusSpec train_spec;
    train_spec.users_per_cluster = a.gen_users;
    train_spec.trajectories_per_user = a.gen_train_trajs;
    train_spec.length = a.gen_train_length;
    auto [train, train_labels] =
        generate_cluster_hmm_corpus(ptrs, train_spec, derive_seed(seed, "gen-train"));
    if (!a.gen_train_out.empty()) save_corpus(train, a.gen_train_out);

    ClusterCorpusSpec test_spec = train_spec;
    test_spec.trajectories_per_user = 1;
    test_spec.length = a.gen_test_length;
    auto [test, test_labels] =
        generate_cluster_hmm_corpus(ptrs, test_spec, derive_seed(seed, "gen-test"));
    corpus = std::move(test);
    labels = std::move(test_labels);
    if (!a.gen_labels_out.empty()) save_labels(labels, a.gen_labels_out);
  } else {
    if (a.corpus_path.empty())
      throw CLI::ValidationError("--corpus", "required unless --gen-clusters is used");
    corpus = load_corpus(a.corpus_path);
    if (!a.labels_path.empty()) labels = load_labels(a.labels_path);
  }

  std::pair<Corpus, std::vector<InjectionRecord>> result = [&] {
    if (a.mode == "cross-cluster")
      return inject_cross_cluster(corpus, labels, a.rate, a.top_k,
                                  derive_seed(seed, "cross"));
    if (a.mode == "uniform")
      return inject_uniform(corpus, a.rate, derive_seed(seed, "uniform"));
    throw CLI::ValidationError("--mode", "expected cross-cluster or uniform");
  }();

  save_corpus(result.first, a.out_path);
  save_injections(result.second, *result.first.vocab, a.records_path);
  size_t injected = 0;
  for (const auto& r : result.second) injected += r.positions.size();
  std::cout << "injected " << injected << " outliers over "
            << result.first.total_actions() << " actions\n";
  return 0;
}

struct EvaluateArgs {
  std::string model_path;
  std::string test_path;
  std::string records_path;
  std::string sweep = "0.05:0.2:0.05";
  size_t sample_size = 500;
  size_t n_reps = 10;
  size_t max_iter = 30;
  size_t min_length = 9;
  double epsilon = 1.0;
  size_t bayes_mc = 100000;
  std::string metrics_out = "metrics.csv";
  std::string tests_out = "tests.csv";
};

int run_evaluate(const EvaluateArgs& a, uint64_t master_seed, unsigned threads) {
  auto model = load_model(a.model_path);
  Corpus test = load_corpus(a.test_path, model->shared_vocabulary());
  auto records = load_injections(*test.vocab, a.records_path);
  auto truth_all = injection_truth(test, records);

  std::vector<size_t> kept;
  Corpus usable = filter_min_length(test, a.min_length, &kept);
  if (usable.trajectories.empty())
    throw std::runtime_error("evaluate: no test trajectory reaches the minimum length");

  const auto prior = PopularityPrior::from(model->vocabulary(), a.epsilon);
  const uint64_t seed = derive_seed(master_seed, "evaluate");

  // Detection p-values on the injected corpus and on the simulated null
  // corpus are both beta-independent: compute each once, sweep alpha after.
  DetectorConfig cfg;
  cfg.sample_size = a.sample_size;
  cfg.seed = derive_seed(seed, "eval-detect");
  auto test_reports = detect_corpus(usable, *model, prior, cfg, threads);

  Corpus simulated = simulate_null(*model, user_lengths_of(usable), a.n_reps,
                                   derive_seed(seed, "eval-sim"));
  DetectorConfig null_cfg;
  null_cfg.sample_size = a.sample_size;
  null_cfg.seed = derive_seed(seed, "eval-null-detect");
  auto null_reports = detect_corpus(simulated, *model, prior, null_cfg, threads);

  std::vector<uint8_t> truth;
  for (size_t i : kept)
    truth.insert(truth.end(), truth_all[i].begin(), truth_all[i].end());

  std::ofstream metrics(a.metrics_out);
  std::ofstream tests(a.tests_out);
  if (!metrics || !tests) throw std::runtime_error("evaluate: cannot write outputs");
  metrics << "model,alpha,beta,precision,recall,f1\n";
  tests << "model,alpha,fisher_p,bayes_p\n";

  const auto alphas = parse_sweep(a.sweep);
  for (size_t ai = 0; ai < alphas.size(); ++ai) {
    const double alpha = alphas[ai];
    const auto cal = calibrate_from_reports(null_reports, alpha, a.sample_size,
                                            model->vocabulary().size(), a.max_iter);
    std::vector<uint8_t> decisions;
    decisions.reserve(truth.size());
    for (const auto& r : test_reports)
      for (const auto& act : r.actions)
        decisions.push_back(act.pvalue <= cal.beta ? 1 : 0);

    const auto m = prf1(decisions, truth);
    const auto table = contingency_from(decisions, truth);
    const double fisher = fisher_exact(table);
    Rng bayes_rng(derive_seed(seed, "eval-bayes", ai));
    const double bayes = bayesian_pvalue(table, {1.0, a.bayes_mc}, bayes_rng);

    metrics << model->kind() << ',' << alpha << ',' << cal.beta << ',' << m.precision
            << ',' << m.recall << ',' << m.f1 << '\n';
    tests << model->kind() << ',' << alpha << ',' << fisher << ',' << bayes << '\n';
  }
  std::cout << "wrote " << a.metrics_out << " and " << a.tests_out << " ("
            << alphas.size() << " alpha values)\n";
  return 0;
}

struct BenchArgs {
  std::string models = "ngram";
  std::string omegas = "1000,2000,5000";
  size_t sample_size = 500;
  size_t length = 25;
  size_t reps = 20;
  std::string out_path = "bench.csv";
};

int run_bench(const BenchArgs& a, uint64_t master_seed) {
  BenchSpec spec;
  spec.kinds.clear();
  std::istringstream ms(a.models);
  std::string kind;
  while (std::getline(ms, kind, ',')) spec.kinds.push_back(kind);
  spec.omegas.clear();
  for (double v : parse_grid(a.omegas)) spec.omegas.push_back(static_cast<size_t>(v));
  spec.sample_size = a.sample_size;
  spec.seq_length = a.length;
  spec.reps = a.reps;
  spec.seed = derive_seed(master_seed, "bench");

  const auto rows = bench_runtime(spec);
  std::ofstream out(a.out_path);
  if (!out) throw std::runtime_error("bench: cannot write " + a.out_path);
  write_bench_csv(out, rows);
  std::cout << "wrote " << a.out_path << " (" << rows.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqod: contextual outlier detection in discrete action sequences"};
  app.set_config("--config", "", "flat key=value config file; flags override");
  app.require_subcommand(1);
  app.fallthrough();  // global options may appear after the subcommand

  uint64_t master_seed = 1;
  unsigned threads = default_threads();
  app.add_option("--seed", master_seed, "master seed; every stage derives from it");
  app.add_option("--threads", threads, "worker threads (1 = serial, same output)");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit a null model on training sequences");
  fit->add_option("--model", fit_args.model_kind, "bag|ngram|hmm|switchingflow")
      ->required();
  fit->add_option("--train", fit_args.train_path, "training corpus (tsv-lines)")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--vocab", fit_args.vocab_path, "fixed vocabulary file")
      ->check(CLI::ExistingFile);
  fit->add_option("--out", fit_args.out_path, "model output path");
  fit->add_option("--fit-report", fit_args.report_path, "fit report output path");
  fit->add_option("--epsilon", fit_args.epsilon, "smoothing parameter");
  fit->add_option("--order", fit_args.order, "ngram context length");
  fit->add_option("--states", fit_args.states, "hmm state count");
  fit->add_option("--iters", fit_args.iters, "hmm max EM iterations");
  fit->add_option("--restarts", fit_args.restarts, "hmm random restarts");
  fit->add_option("--pseudocount", fit_args.pseudocount, "hmm additive regularization");
  fit->add_option("--envs", fit_args.envs, "switchingflow environment count");
  fit->add_option("--q", fit_args.q, "switchingflow candidate probability");
  fit->add_option("--q-grid", fit_args.q_grid, "comma list; grid-search q by held-out LL");
  fit->add_option("--prior-a", fit_args.prior_a, "transition Dirichlet concentration");
  fit->add_option("--prior-r", fit_args.prior_r, "rho Beta r");
  fit->add_option("--prior-s", fit_args.prior_s, "rho Beta s");
  fit->add_option("--burn-in", fit_args.burn_in, "Gibbs burn-in sweeps");
  fit->add_option("--sweeps", fit_args.sweeps, "retained Gibbs sweeps");

  CalibrateArgs cal_args;
  auto* cal = app.add_subcommand("calibrate", "find beta meeting a target FPR");
  cal->add_option("--model", cal_args.model_path, "fitted model file")
      ->required()
      ->check(CLI::ExistingFile);
  cal->add_option("--test", cal_args.test_path, "test corpus (length source)")
      ->required()
      ->check(CLI::ExistingFile);
  cal->add_option("--alpha", cal_args.alpha, "target per-action FPR")->required();
  cal->add_option("--sample-size", cal_args.sample_size, "candidate actions per position");
  cal->add_option("--n-reps", cal_args.n_reps, "simulated trajectories per user");
  cal->add_option("--tol", cal_args.tol, "FPR resolution requirement");
  cal->add_option("--max-iter", cal_args.max_iter, "binary search iterations");
  cal->add_option("--min-length", cal_args.min_length, "exclude shorter test trajectories");
  cal->add_option("--epsilon", cal_args.epsilon, "popularity prior smoothing");
  cal->add_option("--out", cal_args.out_path, "calibration record path");

  DetectArgs det_args;
  auto* det = app.add_subcommand("detect", "flag outliers in test sequences");
  det->add_option("--model", det_args.model_path, "fitted model file")
      ->required()
      ->check(CLI::ExistingFile);
  det->add_option("--calibration", det_args.calib_path, "calibration record")
      ->check(CLI::ExistingFile);
  det->add_option("--test", det_args.test_path, "test corpus")
      ->required()
      ->check(CLI::ExistingFile);
  det->add_option("--beta", det_args.beta, "explicit rejection probability");
  det->add_option("--sample-size", det_args.sample_size, "candidate actions per position");
  det->add_option("--min-length", det_args.min_length, "exclude shorter test trajectories");
  det->add_option("--epsilon", det_args.epsilon, "popularity prior smoothing");
  det->add_option("--out", det_args.out_path, "detection CSV path");

  InjectArgs inj_args;
  auto* inj = app.add_subcommand("inject", "inject synthetic outliers (and optionally "
                                           "generate a cluster-HMM corpus)");
  inj->add_option("--corpus", inj_args.corpus_path, "corpus to inject into")
      ->check(CLI::ExistingFile);
  inj->add_option("--mode", inj_args.mode, "cross-cluster|uniform");
  inj->add_option("--rate", inj_args.rate, "fraction of actions replaced per trajectory");
  inj->add_option("--top-k", inj_args.top_k, "cross-cluster donor pool size");
  inj->add_option("--labels", inj_args.labels_path, "user,cluster CSV")
      ->check(CLI::ExistingFile);
  inj->add_option("--out", inj_args.out_path, "injected corpus path");
  inj->add_option("--records", inj_args.records_path, "injection records CSV path");
  inj->add_option("--gen-clusters", inj_args.gen_clusters,
                  "generate a K-cluster HMM corpus first");
  inj->add_option("--gen-states", inj_args.gen_states, "states per cluster HMM");
  inj->add_option("--gen-users", inj_args.gen_users, "users per cluster");
  inj->add_option("--gen-train-trajs", inj_args.gen_train_trajs,
                  "training trajectories per user");
  inj->add_option("--gen-train-length", inj_args.gen_train_length, "training length");
  inj->add_option("--gen-test-length", inj_args.gen_test_length, "test length");
  inj->add_option("--gen-leak", inj_args.gen_leak, "off-block emission mass");
  inj->add_option("--gen-train-out", inj_args.gen_train_out, "training corpus path");
  inj->add_option("--gen-labels-out", inj_args.gen_labels_out, "labels CSV path");

  EvaluateArgs eval_args;
  auto* ev = app.add_subcommand("evaluate", "F1 and independence tests over an alpha sweep");
  ev->add_option("--model", eval_args.model_path, "fitted model file")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--test", eval_args.test_path, "injected test corpus")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--records", eval_args.records_path, "injection records CSV")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--sweep-alpha", eval_args.sweep, "start:stop:step or single value");
  ev->add_option("--sample-size", eval_args.sample_size, "candidate actions per position");
  ev->add_option("--n-reps", eval_args.n_reps, "simulated trajectories per user");
  ev->add_option("--max-iter", eval_args.max_iter, "binary search iterations");
  ev->add_option("--min-length", eval_args.min_length, "exclude shorter test trajectories");
  ev->add_option("--epsilon", eval_args.epsilon, "popularity prior smoothing");
  ev->add_option("--bayes-mc", eval_args.bayes_mc, "Bayesian test Monte-Carlo draws");
  ev->add_option("--metrics-out", eval_args.metrics_out, "metrics CSV path");
  ev->add_option("--tests-out", eval_args.tests_out, "independence tests CSV path");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "detection runtime vs vocabulary size");
  bench->add_option("--models", bench_args.models, "comma list of model kinds");
  bench->add_option("--omegas", bench_args.omegas, "comma list of vocabulary sizes");
  bench->add_option("--sample", bench_args.sample_size, "candidate actions per position");
  bench->add_option("--length", bench_args.length, "test sequence length");
  bench->add_option("--reps", bench_args.reps, "timing repetitions (median kept)");
  bench->add_option("--out", bench_args.out_path, "bench CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (*fit) return run_fit(fit_args, master_seed);
    if (*cal) return run_calibrate(cal_args, master_seed, threads);
    if (*det) return run_detect(det_args, master_seed, threads);
    if (*inj) return run_inject(inj_args, master_seed);
    if (*ev) return run_evaluate(eval_args, master_seed, threads);
    if (*bench) return run_bench(bench_args, master_seed);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
