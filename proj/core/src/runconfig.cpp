#include "egoscene/runconfig.hpp"

#include <fstream>

#include <json.hpp>

namespace egoscene {

namespace {

using nlohmann::json;

experiment::TrainConfig train_from_json(const json& j) {
  experiment::TrainConfig t;
  for (const auto& [key, value] : j.items()) {
    if (key == "batch_size") {
      t.batch_size = value.get<int>();
    } else if (key == "lr") {
      t.lr = value.get<double>();
    } else if (key == "beta1") {
      t.beta1 = value.get<double>();
    } else if (key == "beta2") {
      t.beta2 = value.get<double>();
    } else if (key == "dropout") {
      t.dropout = value.get<double>();
    } else if (key == "max_epochs") {
      t.max_epochs = value.get<int>();
    } else if (key == "patience") {
      t.patience = value.get<int>();
    } else if (key == "val_participants") {
      t.val_participants = value.get<int>();
    } else {
      throw ConfigError("config: unknown train key '" + key + "'");
    }
  }
  if (t.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (t.max_epochs < 1) throw ConfigError("config: max_epochs must be >= 1");
  if (t.patience < 1) throw ConfigError("config: patience must be >= 1");
  if (t.val_participants < 0) throw ConfigError("config: val_participants must be >= 0");
  if (t.dropout < 0.0 || t.dropout >= 1.0) throw ConfigError("config: dropout must be in [0,1)");
  return t;
}

}  // namespace

std::string_view fg_mode_name(ingest::FgMode mode) {
  return mode == ingest::FgMode::full ? "full" : "fg_active";
}

ingest::FgMode fg_mode_from_name(std::string_view name) {
  if (name == "full") return ingest::FgMode::full;
  if (name == "fg_active") return ingest::FgMode::fg_active;
  throw ConfigError("unknown mode '" + std::string(name) + "' (want fg_active|full)");
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "data_root") {
        c.data_root = value.get<std::string>();
      } else if (key == "output_dir") {
        c.output_dir = value.get<std::string>();
      } else if (key == "mode") {
        c.mode = fg_mode_from_name(value.get<std::string>());
      } else if (key == "models") {
        c.models.clear();
        for (const auto& m : value) {
          auto kind = model_kind_from_name(m.get<std::string>());
          if (!kind) {
            throw ConfigError("config: unknown model '" + m.get<std::string>() +
                              "' (want mlp|tdnn-small|tdnn-big)");
          }
          c.models.push_back(*kind);
        }
        if (c.models.empty()) throw ConfigError("config: models must not be empty");
      } else if (key == "folds") {
        c.folds = value.get<int>();
        if (c.folds < 2) throw ConfigError("config: folds must be >= 2");
      } else if (key == "train") {
        c.train = train_from_json(value);
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "jobs") {
        c.jobs = value.get<int>();
        if (c.jobs < 0) throw ConfigError("config: jobs must be >= 0");
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value type: ") + e.what());
  }
  if (c.data_root.empty()) throw ConfigError("config: data_root is required");
  if (c.output_dir.empty()) throw ConfigError("config: output_dir is required");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return config_from_json(text);
}

}  // namespace egoscene
