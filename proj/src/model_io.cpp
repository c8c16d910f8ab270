#include "seqod/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "seqod/models/bag.hpp"
#include "seqod/models/hmm.hpp"
#include "seqod/models/ngram.hpp"
#include "seqod/models/switching_flow.hpp"
#include "seqod/rng.hpp"

namespace seqod {

namespace {
constexpr int kFormatVersion = 1;
}

std::string serialize_model(const NullModel& model) {
  const Vocabulary& v = model.vocabulary();
  nlohmann::json j = {{"format", "seqod-model"},
                      {"version", kFormatVersion},
                      {"kind", model.kind()},
                      {"vocab", {{"tokens", v.tokens()}, {"counts", v.counts()}}},
                      {"params", model.to_json()}};
  return j.dump();
}

std::unique_ptr<NullModel> deserialize_model(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.value("format", "") != "seqod-model")
    throw std::runtime_error("model: not a seqod model file");
  if (j.at("version").get<int>() != kFormatVersion)
    throw std::runtime_error("model: unsupported format version");
  auto vocab = std::make_shared<Vocabulary>(Vocabulary::from_tokens(
      j.at("vocab").at("tokens").get<std::vector<std::string>>(),
      j.at("vocab").at("counts").get<std::vector<int64_t>>()));
  const std::string kind = j.at("kind").get<std::string>();
  const auto& params = j.at("params");
  if (kind == "bag") return BagOfActionsModel::from_json(params, vocab);
  if (kind == "ngram") return NgramModel::from_json(params, vocab);
  if (kind == "hmm") return HmmModel::from_json(params, vocab);
  if (kind == "switchingflow") return SwitchingFlowModel::from_json(params, vocab);
  throw std::runtime_error("model: unknown kind '" + kind + "'");
}

void save_model(const NullModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("model: cannot write " + path.string());
  out << serialize_model(model);
}

std::unique_ptr<NullModel> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

std::string model_hash(const NullModel& model) {
  const uint64_t h = hash_string(serialize_model(model));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace seqod
