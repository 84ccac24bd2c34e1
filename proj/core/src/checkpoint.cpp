#include "lrvae/checkpoint.hpp"
#include <algorithm>

#include "lrvae/errors.hpp"
#include "lrvae/io.hpp"

namespace lrvae {
namespace {

using nlohmann::json;

json schedule_json(const PreserveRateSchedule& s) {
  return {{"direction", to_string(s.direction())},
          {"form", to_string(s.form())},
          {"p_max", s.p_max()},
          {"p_min", s.p_min()},
          {"rates", std::vector<double>(s.rates().begin(), s.rates().end())}};
}

void check_schedule(const json& doc, const PreserveRateSchedule& rebuilt, const char* name) {
  const auto rates = doc.at("rates").get<std::vector<double>>();
  if (!std::equal(rates.begin(), rates.end(), rebuilt.rates().begin(), rebuilt.rates().end()) ||
      doc.at("direction").get<std::string>() != to_string(rebuilt.direction())) {
    throw ValidationError(std::string("checkpoint ") + name + " schedule does not match its parameters");
  }
}

}  // namespace

json checkpoint_to_json(const LrVaeModel& model) {
  const ModelConfig& c = model.config;
  json params = json::array();
  for (const ad::Parameter* p : model.parameters()) {
    params.push_back({{"name", p->name},
                      {"shape", p->value.shape()},
                      {"values", std::vector<double>(p->value.values().begin(), p->value.values().end())}});
  }
  return {
      {"format", "lrvae-checkpoint"},
      {"format_version", kCheckpointFormatVersion},
      {"config",
       {{"variant", to_string(c.variant)},
        {"feature_dim", c.feature_dim},
        {"latent_dim", c.latent_dim},
        {"encoder_hidden", c.encoder_hidden},
        {"head_hidden", c.head_hidden},
        {"num_emotions", c.num_emotions},
        {"num_speakers", c.num_speakers},
        {"p_max", c.p_max},
        {"p_min", c.p_min},
        {"schedule_form", to_string(c.schedule_form)},
        {"emotion_adversary_lambda", c.emotion_adversary_lambda},
        {"identity_adversary_lambda", c.identity_adversary_lambda}}},
      {"schedules",
       {{"emotion", schedule_json(model.emotion_schedule)}, {"identity", schedule_json(model.identity_schedule)}}},
      {"parameters", std::move(params)},
      {"standardization", {{"mean", model.metadata.input_stats.mean}, {"stddev", model.metadata.input_stats.stddev}}},
      {"labels", {{"emotions", model.metadata.emotion_names}, {"speakers", model.metadata.speaker_names}}},
      {"seeds", {{"init", model.metadata.init_seed}, {"train", model.metadata.train_seed}}},
  };
}

LrVaeModel checkpoint_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "lrvae-checkpoint") {
      throw ValidationError("not an lrvae checkpoint");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw ValidationError("unsupported checkpoint format_version " + std::to_string(version));
    }
    const json& jc = doc.at("config");
    ModelConfig c;
    c.variant = parse_variant(jc.at("variant").get<std::string>());
    c.feature_dim = jc.at("feature_dim").get<std::size_t>();
    c.latent_dim = jc.at("latent_dim").get<std::size_t>();
    c.encoder_hidden = jc.at("encoder_hidden").get<std::vector<std::size_t>>();
    c.head_hidden = jc.at("head_hidden").get<std::size_t>();
    c.num_emotions = jc.at("num_emotions").get<std::size_t>();
    c.num_speakers = jc.at("num_speakers").get<std::size_t>();
    c.p_max = jc.at("p_max").get<double>();
    c.p_min = jc.at("p_min").get<double>();
    c.schedule_form = parse_schedule_form(jc.at("schedule_form").get<std::string>());
    c.emotion_adversary_lambda = jc.at("emotion_adversary_lambda").get<double>();
    c.identity_adversary_lambda = jc.at("identity_adversary_lambda").get<double>();

    const json& seeds = doc.at("seeds");
    LrVaeModel m = LrVaeModel::initialize(c, seeds.at("init").get<std::uint64_t>());
    m.metadata.train_seed = seeds.at("train").get<std::uint64_t>();
    check_schedule(doc.at("schedules").at("emotion"), m.emotion_schedule, "emotion");
    check_schedule(doc.at("schedules").at("identity"), m.identity_schedule, "identity");

    const json& params = doc.at("parameters");
    auto slots = m.parameters();
    if (params.size() != slots.size()) {
      throw ValidationError("checkpoint has " + std::to_string(params.size()) + " parameters, variant expects " +
                            std::to_string(slots.size()));
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const json& jp = params[i];
      const auto name = jp.at("name").get<std::string>();
      if (name != slots[i]->name) {
        throw ValidationError("checkpoint parameter " + std::to_string(i) + " is '" + name + "', expected '" +
                              slots[i]->name + "'");
      }
      Tensor value(jp.at("shape").get<Shape>(), jp.at("values").get<std::vector<double>>());
      if (value.shape() != slots[i]->value.shape()) {
        throw DimensionError("checkpoint parameter '" + name + "' has shape " + format_shape(value.shape()) +
                             ", expected " + format_shape(slots[i]->value.shape()));
      }
      slots[i]->value = std::move(value);
    }

    const json& stats = doc.at("standardization");
    m.metadata.input_stats.mean = stats.at("mean").get<std::vector<double>>();
    m.metadata.input_stats.stddev = stats.at("stddev").get<std::vector<double>>();
    if (!m.metadata.input_stats.empty() && (m.metadata.input_stats.mean.size() != c.feature_dim ||
                                            m.metadata.input_stats.stddev.size() != c.feature_dim)) {
      throw DimensionError("checkpoint standardization does not match feature_dim");
    }
    m.metadata.emotion_names = doc.at("labels").at("emotions").get<std::vector<std::string>>();
    m.metadata.speaker_names = doc.at("labels").at("speakers").get<std::vector<std::string>>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const LrVaeModel& model, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_json(model).dump() + "\n");
}

LrVaeModel load_checkpoint(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace lrvae
