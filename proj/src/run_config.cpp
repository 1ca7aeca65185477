#include "lighttbnet/run_config.hpp"

#include <fstream>
#include <set>

namespace ltbn {

void RunConfig::validate() const {
  auto wrap = [](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(field) + ": " + e.what());
    }
  };
  wrap("model", [&] { model.validate(); });
  wrap("preprocess", [&] { preprocess.validate(); });
  wrap("augment", [&] { augment.validate(); });
  wrap("focal", [&] { focal.validate(); });
  wrap("adam", [&] { adam.validate(); });
  if (model.input_size != preprocess.size) {
    throw ConfigError("model.input_size (" + std::to_string(model.input_size) + ") must equal preprocess.size (" +
                      std::to_string(preprocess.size) + ")");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must be in [0,1]");
  if (!(split.test_frac > 0.0 && split.test_frac < 1.0)) throw ConfigError("split.test_frac must be in (0,1)");
  if (split.n_folds < 2) throw ConfigError("split.n_folds must be >= 2");
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.epochs = epochs;
  o.batch_size = batch_size;
  o.adam = adam;
  o.focal = focal;
  o.augment = augment;
  o.augment_enabled = augment_enabled;
  o.seed = seed;
  o.threshold = threshold;
  o.preprocessing = preprocess;
  return o;
}

nlohmann::json to_json_value(const RunConfig& c) {
  nlohmann::json aug = c.augment;
  aug["enabled"] = c.augment_enabled;
  return {{"manifest", c.manifest.string()},
          {"output_dir", c.output_dir.string()},
          {"split_csv", c.split_csv.string()},
          {"seed", c.seed},
          {"threshold", c.threshold},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"parallel_folds", c.parallel_folds},
          {"split", {{"test_frac", c.split.test_frac}, {"n_folds", c.split.n_folds}, {"min_stratum", c.split.min_stratum}}},
          {"model", c.model},
          {"preprocess", c.preprocess},
          {"augment", aug},
          {"focal", {{"gamma", c.focal.gamma}}},
          {"adam", c.adam}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::set<std::string> known = {"manifest", "output_dir", "split_csv", "seed",    "threshold",
                                              "epochs",   "batch_size", "parallel_folds", "split", "model",
                                              "preprocess", "augment",  "focal",     "adam"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  try {
    c.manifest = j.value("manifest", std::string());
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.split_csv = j.value("split_csv", std::string());
    c.seed = j.value("seed", c.seed);
    c.threshold = j.value("threshold", c.threshold);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.parallel_folds = j.value("parallel_folds", c.parallel_folds);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split.test_frac = s.value("test_frac", c.split.test_frac);
      c.split.n_folds = s.value("n_folds", c.split.n_folds);
      c.split.min_stratum = s.value("min_stratum", c.split.min_stratum);
    }
    if (j.contains("preprocess")) c.preprocess = j.at("preprocess").get<PreprocessConfig>();
    if (j.contains("model")) {
      c.model = j.at("model").get<ModelConfig>();
      if (!j.at("model").contains("input_size")) c.model.input_size = c.preprocess.size;
    } else {
      c.model.input_size = c.preprocess.size;
    }
    if (j.contains("augment")) {
      c.augment = j.at("augment").get<AugmentConfig>();
      c.augment_enabled = j.at("augment").value("enabled", true);
    }
    if (j.contains("focal")) c.focal.gamma = j.at("focal").value("gamma", c.focal.gamma);
    if (j.contains("adam")) c.adam = j.at("adam").get<AdamConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.split.seed = c.seed;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  auto c = run_config_from_json(j);
  const auto base = path.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(c.manifest);
  resolve(c.output_dir);
  resolve(c.split_csv);
  return c;
}

}  // namespace ltbn
