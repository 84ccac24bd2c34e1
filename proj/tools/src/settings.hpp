#pragma once

#include <functional>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace lrvae::cli {

template <class T>
struct is_list : std::false_type {};
template <class T>
struct is_list<std::vector<T>> : std::true_type {};

/// Options of one subcommand that can come from flags or a JSON config file.
/// Flags win over file values; file values win over defaults.
class Settings {
 public:
  Settings(CLI::App* app, std::string command);

  /// Registers --key-with-dashes bound to `target`; the JSON key keeps underscores.
  template <class T>
  CLI::Option* add(const std::string& key, T& target, const std::string& help) {
    CLI::Option* opt = app_->add_option(flag_name(key), target, help)->capture_default_str();
    if constexpr (is_list<T>::value) opt->delimiter(',');
    entries_.push_back({key, opt, [&target](const nlohmann::json& j) { target = j.get<T>(); },
                        [&target] { return nlohmann::json(target); }});
    return opt;
  }

  /// Like add, but the value must come from a flag or from --config.
  template <class T>
  CLI::Option* add_required(const std::string& key, T& target, const std::string& help) {
    required_.push_back(key);
    return add(key, target, help);
  }

  /// Fills options not given on the command line from --config, if one was passed.
  void resolve();
  /// Every setting after resolution, plus the command name.
  nlohmann::json snapshot() const;

 private:
  struct Entry {
    std::string key;
    CLI::Option* option;
    std::function<void(const nlohmann::json&)> load;
    std::function<nlohmann::json()> save;
  };

  void load_config(nlohmann::json& doc);
  static std::string flag_name(const std::string& key);

  CLI::App* app_;
  std::string command_;
  std::string config_path_;
  std::vector<Entry> entries_;
  std::vector<std::string> required_;
};

}  // namespace lrvae::cli
