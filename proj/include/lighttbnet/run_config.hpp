#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "lighttbnet/data.hpp"
#include "lighttbnet/model.hpp"
#include "lighttbnet/optim.hpp"
#include "lighttbnet/preprocess.hpp"
#include "lighttbnet/training.hpp"

namespace ltbn {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a pipeline run depends on. Serialized as JSON; every key is
/// optional and missing keys keep the defaults below.
///
/// {
///   "manifest": "data/manifest.csv",  "output_dir": "runs/default",
///   "split_csv": "",                  (default: <output_dir>/split.csv)
///   "seed": 42, "threshold": 0.5, "epochs": 100, "batch_size": 16,
///   "parallel_folds": false,
///   "split": {"test_frac": 0.2, "n_folds": 5, "min_stratum": 5},
///   "model": {"n_blocks": 4, "channel_plan": [...], ...},
///   "preprocess": {"size": 256, "clahe": {"enabled": true, ...}},
///   "augment": {"enabled": true, "flip_prob": 0.5, ...},
///   "focal": {"gamma": 2.0},
///   "adam": {"lr": 1e-4, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}
/// }
struct RunConfig {
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "runs/default";
  std::filesystem::path split_csv;
  std::uint64_t seed = 42;
  double threshold = 0.5;
  int epochs = 100;
  std::size_t batch_size = 16;
  bool parallel_folds = false;
  SplitOptions split;
  ModelConfig model;
  PreprocessConfig preprocess;
  AugmentConfig augment;
  bool augment_enabled = true;
  FocalLossConfig focal;
  AdamConfig adam;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  std::filesystem::path effective_split_csv() const {
    return split_csv.empty() ? output_dir / "split.csv" : split_csv;
  }
  TrainOptions train_options() const;
};

nlohmann::json to_json_value(const RunConfig& c);
/// Unknown top-level keys are rejected so typos do not pass silently.
RunConfig run_config_from_json(const nlohmann::json& j);
/// Relative paths inside the file resolve against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace ltbn
