#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "seqod/null_model.hpp"
#include "seqod/popularity.hpp"

namespace seqod {

struct BenchRow {
  std::string model;
  size_t omega = 0;
  bool sampled = false;
  double seconds = 0.0;  // per sequence, median over repetitions
};

struct BenchSpec {
  std::vector<std::string> kinds = {"ngram"};
  std::vector<size_t> omegas = {1000, 2000, 5000};
  size_t sample_size = 500;
  size_t seq_length = 25;
  size_t reps = 20;
  uint64_t seed = 1;
};

// Wall-clock per detection of one seq_length-action sequence at each
// vocabulary size, with the candidate set capped at sample_size and with the
// full vocabulary. Models are fit on a synthetic corpus built per omega.
std::vector<BenchRow> bench_runtime(const BenchSpec& spec);

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace seqod
