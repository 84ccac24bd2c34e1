#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "lrvae/model.hpp"

namespace lrvae {

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON document holding config, schedules, every parameter, input statistics,
/// label vocabularies and seeds. Round-trips bit-exactly.
nlohmann::json checkpoint_to_json(const LrVaeModel& model);
LrVaeModel checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const LrVaeModel& model, const std::filesystem::path& path);
LrVaeModel load_checkpoint(const std::filesystem::path& path);

}  // namespace lrvae
