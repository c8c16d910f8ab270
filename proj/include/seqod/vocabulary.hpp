#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace seqod {

// The action set: dense ids in first-appearance order plus global occurrence
// counts from the corpus it was built on. Immutable once built; safe for
// concurrent reads.
class Vocabulary {
 public:
  Vocabulary() = default;

  static Vocabulary build(const std::vector<std::vector<std::string>>& sequences);

  // One token per line, id = line index. Counts start at zero; call
  // with_counts() after tallying a corpus against it.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  static Vocabulary from_tokens(std::vector<std::string> tokens,
                                std::vector<int64_t> counts = {});

  size_t size() const { return tokens_.size(); }
  const std::string& token(int32_t id) const { return tokens_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<int64_t>& counts() const { return counts_; }

  int32_t id_of(std::string_view token) const;           // throws on unknown token
  std::optional<int32_t> find(std::string_view token) const;

  int64_t count(int32_t id) const { return counts_.at(static_cast<size_t>(id)); }
  int64_t total_count() const { return total_; }

  Vocabulary with_counts(std::vector<int64_t> counts) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int32_t> ids_;
  std::vector<int64_t> counts_;
  int64_t total_ = 0;
};

}  // namespace seqod
