#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "seqod/null_model.hpp"

namespace seqod {

// Model files are self-describing JSON: format tag, version, model kind,
// vocabulary (tokens + training counts), and the model's parameter block.
// Integers round-trip exactly; reals round-trip bit-exact via shortest
// representation.

std::string serialize_model(const NullModel& model);
std::unique_ptr<NullModel> deserialize_model(const std::string& text);

void save_model(const NullModel& model, const std::filesystem::path& path);
std::unique_ptr<NullModel> load_model(const std::filesystem::path& path);

// FNV-1a over the serialized form; stored in calibration records so detect
// can refuse a model/calibration mismatch.
std::string model_hash(const NullModel& model);

}  // namespace seqod
