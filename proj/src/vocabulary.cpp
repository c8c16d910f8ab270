#include "seqod/vocabulary.hpp"

#include <fstream>
#include <stdexcept>

namespace seqod {

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sequences) {
  Vocabulary v;
  bool any = false;
  for (const auto& seq : sequences) {
    for (const auto& tok : seq) {
      any = true;
      auto [it, inserted] = v.ids_.try_emplace(tok, static_cast<int32_t>(v.tokens_.size()));
      if (inserted) {
        v.tokens_.push_back(tok);
        v.counts_.push_back(0);
      }
      ++v.counts_[static_cast<size_t>(it->second)];
      ++v.total_;
    }
  }
  if (!any) throw std::invalid_argument("build_vocabulary: empty input");
  return v;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens,
                                   std::vector<int64_t> counts) {
  Vocabulary v;
  if (tokens.empty()) throw std::invalid_argument("vocabulary: empty input");
  if (counts.empty()) counts.assign(tokens.size(), 0);
  if (counts.size() != tokens.size())
    throw std::invalid_argument("vocabulary: counts/tokens size mismatch");
  v.tokens_ = std::move(tokens);
  v.counts_ = std::move(counts);
  for (size_t i = 0; i < v.tokens_.size(); ++i) {
    auto [it, inserted] = v.ids_.try_emplace(v.tokens_[i], static_cast<int32_t>(i));
    if (!inserted)
      throw std::invalid_argument("vocabulary: duplicate token '" + v.tokens_[i] + "'");
    if (v.counts_[i] < 0) throw std::invalid_argument("vocabulary: negative count");
    v.total_ += v.counts_[i];
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vocabulary: cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  if (tokens.empty()) throw std::runtime_error("vocabulary: empty input " + path.string());
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("vocabulary: cannot write " + path.string());
  for (const auto& tok : tokens_) out << tok << '\n';
}

int32_t Vocabulary::id_of(std::string_view token) const {
  auto f = find(token);
  if (!f) throw std::runtime_error("vocabulary: unknown token '" + std::string(token) + "'");
  return *f;
}

std::optional<int32_t> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Vocabulary Vocabulary::with_counts(std::vector<int64_t> counts) const {
  return from_tokens(tokens_, std::move(counts));
}

}  // namespace seqod
