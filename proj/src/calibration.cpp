#include "seqod/calibration.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "seqod/parallel.hpp"

namespace seqod {

Corpus simulate_null(const NullModel& model,
                     const std::vector<std::pair<std::string, size_t>>& user_lengths,
                     size_t n_reps, uint64_t seed) {
  Corpus out;
  out.vocab = model.shared_vocabulary();
  out.trajectories.reserve(user_lengths.size() * n_reps);
  for (const auto& [user, length] : user_lengths) {
    for (size_t rep = 0; rep < n_reps; ++rep) {
      Rng rng(derive_seed(seed, "simulate", hash_string(user), rep));
      out.trajectories.push_back(model.sample(user, length, rng));
    }
  }
  return out;
}

std::vector<std::pair<std::string, size_t>> user_lengths_of(const Corpus& corpus) {
  std::vector<std::pair<std::string, size_t>> out;
  out.reserve(corpus.trajectories.size());
  for (const auto& t : corpus.trajectories) out.emplace_back(t.user, t.length());
  return out;
}

double empirical_fpr(double beta, const std::vector<DetectionReport>& reports) {
  size_t flagged = 0, total = 0;
  for (const auto& r : reports) {
    total += r.actions.size();
    for (const auto& a : r.actions) flagged += a.pvalue <= beta ? 1 : 0;
  }
  return total == 0 ? 0.0 : static_cast<double>(flagged) / static_cast<double>(total);
}

double empirical_fpr(double beta, const Corpus& simulated, const NullModel& model,
                     const PopularityPrior& prior, size_t sample_size, uint64_t seed,
                     unsigned threads) {
  DetectorConfig cfg;
  cfg.beta = beta;
  cfg.sample_size = sample_size;
  cfg.seed = seed;
  return empirical_fpr(beta, detect_corpus(simulated, model, prior, cfg, threads));
}

CalibrationResult calibrate_from_reports(const std::vector<DetectionReport>& reports,
                                         double alpha, size_t sample_size,
                                         size_t vocab_size, size_t max_iter) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("calibrate_beta: alpha must be in (0, 1]");
  CalibrationResult res;
  res.alpha = alpha;
  for (const auto& r : reports) res.n_actions += r.actions.size();

  if (alpha >= 1.0) {
    res.beta = 1.0;
    res.achieved_fpr = empirical_fpr(1.0, reports);
    return res;
  }

  const double granularity = 1.0 / static_cast<double>(std::min(sample_size, vocab_size));
  double lo = 0.0, hi = 1.0;
  int iterations = 0;
  while (hi - lo >= granularity && iterations < static_cast<int>(max_iter)) {
    const double mid = 0.5 * (lo + hi);
    ++iterations;
    if (empirical_fpr(mid, reports) <= alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  res.iterations = iterations;
  res.beta = lo > 0.0 ? lo : 0.5 * granularity;
  res.achieved_fpr = empirical_fpr(res.beta, reports);
  return res;
}

CalibrationResult calibrate_beta(const NullModel& model, const PopularityPrior& prior,
                                 double alpha, size_t sample_size,
                                 const std::vector<std::pair<std::string, size_t>>& user_lengths,
                                 size_t n_reps, double tol, size_t max_iter,
                                 uint64_t seed, unsigned threads) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("calibrate_beta: alpha must be in (0, 1]");
  if (tol <= 0.0) throw std::invalid_argument("calibrate_beta: tol must be positive");

  // Fixed simulated corpus; p-values do not depend on beta, so detection
  // runs once and the search just counts flags.
  Corpus simulated = simulate_null(model, user_lengths, n_reps, derive_seed(seed, "calib-sim"));
  DetectorConfig cfg;
  cfg.sample_size = sample_size;
  cfg.seed = derive_seed(seed, "calib-detect");
  auto reports = detect_corpus(simulated, model, prior, cfg, threads);
  return calibrate_from_reports(reports, alpha, sample_size, model.vocabulary().size(),
                                max_iter);
}

void save_calibration(const CalibrationRecord& rec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("calibration: cannot write " + path.string());
  char buf[64];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << key << '=' << buf << '\n';
  };
  put("alpha", rec.alpha);
  put("beta", rec.beta);
  put("achieved_fpr", rec.achieved_fpr);
  out << "n_actions=" << rec.n_actions << '\n';
  out << "iterations=" << rec.iterations << '\n';
  out << "sample_size=" << rec.sample_size << '\n';
  out << "seed=" << rec.seed << '\n';
  out << "model_hash=" << rec.model_hash << '\n';
}

CalibrationRecord load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("calibration: cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  CalibrationRecord rec;
  try {
    rec.alpha = std::stod(kv.at("alpha"));
    rec.beta = std::stod(kv.at("beta"));
    rec.achieved_fpr = std::stod(kv.at("achieved_fpr"));
    rec.n_actions = std::stoull(kv.at("n_actions"));
    rec.iterations = std::stoi(kv.at("iterations"));
    rec.sample_size = std::stoull(kv.at("sample_size"));
    rec.seed = std::stoull(kv.at("seed"));
    rec.model_hash = kv.at("model_hash");
  } catch (const std::out_of_range&) {
    throw std::runtime_error("calibration: missing field in " + path.string());
  }
  return rec;
}

}  // namespace seqod
