#include "lrvae/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "lrvae/errors.hpp"
#include "lrvae/io.hpp"
#include "lrvae/rng.hpp"

namespace lrvae {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int intern(std::unordered_map<std::string, int>& index, std::vector<std::string>& names, std::string_view key) {
  auto [it, inserted] = index.emplace(std::string(key), static_cast<int>(names.size()));
  if (inserted) names.emplace_back(key);
  return it->second;
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "dev") return Split::kDev;
  if (s == "test") return Split::kTest;
  throw ValidationError("unknown split tag '" + s + "' (expected train|dev|test)");
}

std::vector<std::size_t> LabeledDataset::rows_in(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(i);
  }
  return out;
}

std::vector<int> LabeledDataset::speakers_in(Split s) const {
  std::set<int> seen;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) seen.insert(speaker[i]);
  }
  return {seen.begin(), seen.end()};
}

void LabeledDataset::validate() const {
  const std::size_t n = emotion.size();
  if (n == 0) throw ValidationError("dataset is empty");
  if (features.rank() != 2 || features.rows() != n || speaker.size() != n || split.size() != n) {
    throw DimensionError("dataset columns disagree on row count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (emotion[i] < 0 || static_cast<std::size_t>(emotion[i]) >= emotion_names.size() || speaker[i] < 0 ||
        static_cast<std::size_t>(speaker[i]) >= speaker_names.size()) {
      throw IndexError("row " + std::to_string(i) + " has a label outside its vocabulary");
    }
  }
  if (!features.all_finite()) throw ValidationError("dataset features contain NaN or infinity");

  std::vector<int> owner(speaker_names.size(), -1);
  for (std::size_t i = 0; i < n; ++i) {
    int& o = owner[static_cast<std::size_t>(speaker[i])];
    const int s = static_cast<int>(split[i]);
    if (o == -1) {
      o = s;
    } else if (o != s) {
      throw ValidationError("speaker '" + speaker_names[static_cast<std::size_t>(speaker[i])] + "' appears in both " +
                            to_string(static_cast<Split>(o)) + " and " + to_string(split[i]) + " splits");
    }
  }
  for (Split s : {Split::kTrain, Split::kDev, Split::kTest}) {
    std::vector<bool> present(emotion_names.size(), false);
    std::size_t rows = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (split[i] == s) {
        present[static_cast<std::size_t>(emotion[i])] = true;
        ++rows;
      }
    }
    if (rows == 0) throw ValidationError("split '" + to_string(s) + "' is empty");
    for (std::size_t e = 0; e < present.size(); ++e) {
      if (!present[e]) {
        throw ValidationError("emotion '" + emotion_names[e] + "' does not occur in split '" + to_string(s) + "'");
      }
    }
  }
}

void LabeledDataset::fit_statistics() { stats = Standardization::fit(features, rows_in(Split::kTrain)); }

std::uint64_t LabeledDataset::split_fingerprint() const {
  Fnv1a h;
  for (std::size_t i = 0; i < size(); ++i) {
    h.update_value(static_cast<std::uint8_t>(split[i]));
    h.update_value(emotion[i]);
    h.update_value(speaker[i]);
  }
  return h.digest();
}

LabeledDataset standardize(const LabeledDataset& dataset) {
  if (dataset.stats.empty()) throw ContractError("standardize: dataset has no fitted statistics");
  LabeledDataset out = dataset;
  out.features = dataset.stats.apply(dataset.features);
  return out;
}

LabeledDataset parse_csv(std::istream& in, const std::string& source) {
  auto fail = [&](std::size_t line, const std::string& what) -> ValidationError {
    return ValidationError(source + ":" + std::to_string(line) + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source + ": empty file, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.size() < 4 || header[header.size() - 3] != "emotion" || header[header.size() - 2] != "speaker" ||
      header.back() != "split") {
    throw fail(1, "header must be feature_0,...,feature_{F-1},emotion,speaker,split");
  }
  const std::size_t f = header.size() - 3;
  for (std::size_t c = 0; c < f; ++c) {
    if (header[c] != "feature_" + std::to_string(c)) {
      throw fail(1, "header column " + std::to_string(c) + " is '" + std::string(header[c]) + "', expected feature_" +
                        std::to_string(c));
    }
  }

  LabeledDataset ds;
  std::vector<double> values;
  std::unordered_map<std::string, int> emotion_index;
  std::unordered_map<std::string, int> speaker_index;
  std::vector<int> speaker_split;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != f + 3) {
      throw fail(line_no, "expected " + std::to_string(f + 3) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < f; ++c) {
      double v = 0.0;
      const auto field = fields[c];
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw fail(line_no, "feature_" + std::to_string(c) + " value '" + std::string(field) + "' is not a finite number");
      }
      values.push_back(v);
    }
    if (fields[f].empty() || fields[f + 1].empty()) throw fail(line_no, "empty emotion or speaker label");
    Split split;
    try {
      split = parse_split(std::string(fields[f + 2]));
    } catch (const ValidationError& e) {
      throw fail(line_no, e.what());
    }
    const int emo = intern(emotion_index, ds.emotion_names, fields[f]);
    const int spk = intern(speaker_index, ds.speaker_names, fields[f + 1]);
    if (static_cast<std::size_t>(spk) == speaker_split.size()) {
      speaker_split.push_back(static_cast<int>(split));
    } else if (speaker_split[static_cast<std::size_t>(spk)] != static_cast<int>(split)) {
      throw fail(line_no, "speaker '" + std::string(fields[f + 1]) + "' appears in both " +
                              to_string(static_cast<Split>(speaker_split[static_cast<std::size_t>(spk)])) + " and " +
                              to_string(split) + " splits");
    }
    ds.emotion.push_back(emo);
    ds.speaker.push_back(spk);
    ds.split.push_back(split);
  }
  if (ds.emotion.empty()) throw ValidationError(source + ": no data rows");
  ds.features = Tensor({ds.emotion.size(), f}, std::move(values));
  try {
    ds.validate();
  } catch (const Error& e) {
    throw ValidationError(source + ": " + e.what());
  }
  ds.fit_statistics();
  return ds;
}

LabeledDataset ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return parse_csv(in, path.string());
}

std::string to_csv(const LabeledDataset& dataset) {
  std::string out;
  const std::size_t f = dataset.feature_dim();
  for (std::size_t c = 0; c < f; ++c) {
    out += "feature_" + std::to_string(c) + ",";
  }
  out += "emotion,speaker,split\n";
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (std::size_t c = 0; c < f; ++c) {
      out += format_double(dataset.features(r, c));
      out += ',';
    }
    out += dataset.emotion_names[static_cast<std::size_t>(dataset.emotion[r])];
    out += ',';
    out += dataset.speaker_names[static_cast<std::size_t>(dataset.speaker[r])];
    out += ',';
    out += to_string(dataset.split[r]);
    out += '\n';
  }
  return out;
}

void export_csv(const LabeledDataset& dataset, const std::filesystem::path& path) {
  write_text_file(path, to_csv(dataset));
}

}  // namespace lrvae
