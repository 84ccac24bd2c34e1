#include "settings.hpp"

#include <algorithm>

#include "lrvae/errors.hpp"
#include "lrvae/io.hpp"

namespace lrvae::cli {

Settings::Settings(CLI::App* app, std::string command) : app_(app), command_(std::move(command)) {
  app_->add_option("--config", config_path_, "JSON config file; explicit flags override its values");
}

std::string Settings::flag_name(const std::string& key) {
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

void Settings::resolve() {
  nlohmann::json doc = nlohmann::json::object();
  if (!config_path_.empty()) load_config(doc);
  for (const std::string& key : required_) {
    auto entry = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
    if (entry->option->count() == 0 && !doc.contains(key)) throw ValidationError(flag_name(key) + " is required");
  }
}

void Settings::load_config(nlohmann::json& doc) {
  try {
    doc = nlohmann::json::parse(read_text_file(config_path_));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(config_path_ + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError(config_path_ + ": expected a JSON object");
  if (auto it = doc.find("command"); it != doc.end() && *it != command_) {
    throw ValidationError(config_path_ + ": config is for '" + it->get<std::string>() + "', not '" + command_ + "'");
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "command") continue;
    auto entry = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
    if (entry == entries_.end()) throw ValidationError(config_path_ + ": unknown setting '" + key + "'");
    if (entry->option->count() > 0) continue;
    try {
      entry->load(value);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(config_path_ + ": bad value for '" + key + "': " + e.what());
    }
  }
}

nlohmann::json Settings::snapshot() const {
  nlohmann::json doc = nlohmann::json::object();
  doc["command"] = command_;
  for (const Entry& e : entries_) doc[e.key] = e.save();
  return doc;
}

}  // namespace lrvae::cli
