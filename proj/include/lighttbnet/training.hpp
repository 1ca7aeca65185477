#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "lighttbnet/augment.hpp"
#include "lighttbnet/checkpoint.hpp"
#include "lighttbnet/data.hpp"
#include "lighttbnet/model.hpp"
#include "lighttbnet/optim.hpp"
#include "lighttbnet/preprocess.hpp"

namespace ltbn {

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double val_acc = 0;
  double val_f1 = 0;
  double val_auc = 0;  // NaN when the validation fold holds one class
};

struct TrainOptions {
  int epochs = 100;
  std::size_t batch_size = 16;
  AdamConfig adam;
  FocalLossConfig focal;
  AugmentConfig augment;  // its seed is replaced by a per-fold stream
  bool augment_enabled = true;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  nlohmann::json preprocessing = nlohmann::json::object();  // stored in the checkpoint
  std::function<void(const EpochLog&)> on_epoch;

  void validate() const;
};

/// Raised when a loss turns NaN or infinite.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  Checkpoint checkpoint;  // snapshot from the epoch with the highest val AUC
  std::vector<EpochLog> log;
};

/// Derived seeds of one fold. Each fold draws from its own streams so folds
/// can train concurrently without sharing RNG state.
struct FoldSeeds {
  std::uint64_t model = 0;
  std::uint64_t augment = 0;
  std::uint64_t shuffle = 0;
};
FoldSeeds fold_seeds(std::uint64_t seed, int fold);

/// Trains on the training records outside `fold` and validates on `fold`.
/// After each epoch the val AUC is computed; the parameters of the first
/// epoch reaching the maximum are kept.
TrainResult train_fold(const ModelConfig& model_cfg, const SampleSource& data, const SplitAssignment& split,
                       int fold, const TrainOptions& opts);

/// CSV: epoch,train_loss,val_acc,val_f1,val_auc
void write_training_log(const std::filesystem::path& path, std::span<const EpochLog> log);

/// TB probabilities (softmax column 1) for `indices`, in eval mode without
/// recording a graph. The model's training flag is restored afterwards.
std::vector<double> predict_scores(LightTBNet<float>& model, const SampleSource& data,
                                   std::span<const std::size_t> indices, std::size_t batch_size = 16);

}  // namespace ltbn
