#include "lighttbnet/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lighttbnet/metrics.hpp"
#include "lighttbnet/nn_ops.hpp"

namespace ltbn {

void TrainOptions::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2 (batch norm needs two samples)");
  adam.validate();
  focal.validate();
  if (augment_enabled) augment.validate();
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("train: threshold must be in [0,1]");
}

FoldSeeds fold_seeds(std::uint64_t seed, int fold) {
  const auto f = static_cast<std::uint64_t>(fold);
  return {stream_seed(seed, f, 0x6d6f64656cULL), stream_seed(seed, f, 0x6175676dULL),
          stream_seed(seed, f, 0x73687566ULL)};
}

std::vector<double> predict_scores(LightTBNet<float>& model, const SampleSource& data,
                                   std::span<const std::size_t> indices, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("predict_scores: batch_size must be positive");
  const bool was_training = model.training();
  model.set_training(false);
  NoGradGuard no_grad;
  std::vector<double> scores;
  scores.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); i += batch_size) {
    const auto chunk = indices.subspan(i, std::min(batch_size, indices.size() - i));
    const auto probs = model.forward(make_batch(data, chunk));
    for (std::size_t r = 0; r < chunk.size(); ++r) scores.push_back(probs.at({r, 1}));
  }
  model.set_training(was_training);
  return scores;
}

namespace {

// Batch norm cannot normalize a single sample, so a trailing batch of one
// joins its predecessor.
void fold_singleton_tail(std::vector<std::vector<std::size_t>>& batches) {
  if (batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
}

std::vector<Tensor<float>> param_tensors(LightTBNet<float>& model) {
  std::vector<Tensor<float>> out;
  for (auto& p : model.parameters()) out.push_back(p.tensor);
  return out;
}

}  // namespace

TrainResult train_fold(const ModelConfig& model_cfg, const SampleSource& data, const SplitAssignment& split,
                       int fold, const TrainOptions& opts) {
  opts.validate();
  if (fold < 0 || fold >= split.n_folds) throw std::invalid_argument("train: invalid fold " + std::to_string(fold));
  if (split.rows.size() != data.size()) throw std::invalid_argument("train: split and data sizes differ");

  const auto seeds = fold_seeds(opts.seed, fold);
  ModelConfig cfg = model_cfg;
  cfg.seed = seeds.model;
  LightTBNet<float> model(cfg);
  Adam<float> adam(param_tensors(model), opts.adam);

  AugmentConfig aug = opts.augment;
  aug.seed = seeds.augment;

  const auto val_idx = split.fold_indices(fold);
  std::vector<int> val_labels;
  for (auto i : val_idx) val_labels.push_back(data.label(i));
  if (val_idx.empty()) throw std::invalid_argument("train: validation fold is empty");

  TrainResult result;
  double best_auc = -std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    model.set_training(true);
    auto batches = make_batches(split, fold, BatchRole::Train, opts.batch_size, seeds.shuffle, epoch);
    fold_singleton_tail(batches);
    if (batches.empty() || batches[0].size() < 2) throw std::invalid_argument("train: need at least two training records");

    double loss_sum = 0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      const auto x = make_batch(data, idx, opts.augment_enabled ? &aug : nullptr, epoch);
      const auto labels = batch_labels(data, idx);
      model.zero_grad();
      auto loss = focal_loss(model.forward(x), labels, opts.focal);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss " << value << " at epoch " << epoch << ", batch " << b << " (lr " << opts.adam.lr
            << ", fold " << fold << ")";
        throw TrainingError(msg.str());
      }
      loss.backward();
      adam.step();
      loss_sum += value * static_cast<double>(idx.size());
      seen += idx.size();
    }

    const auto scores = predict_scores(model, data, val_idx, opts.batch_size);
    const auto report = classify_and_report(scores, val_labels, opts.threshold);
    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(seen);
    row.val_acc = report.acc;
    row.val_f1 = report.f1;
    row.val_auc = report.auc_defined ? report.auc : std::numeric_limits<double>::quiet_NaN();
    result.log.push_back(row);
    if (opts.on_epoch) opts.on_epoch(row);

    // NaN never compares greater, so a single-class fold keeps epoch 1.
    if (!have_best || row.val_auc > best_auc) {
      have_best = true;
      if (!std::isnan(row.val_auc)) best_auc = row.val_auc;
      CheckpointMeta meta;
      meta.fold_id = fold;
      meta.epoch = epoch;
      meta.val_auc = row.val_auc;
      meta.seed = opts.seed;
      meta.preprocessing = opts.preprocessing;
      meta.extra = {{"train_loss", row.train_loss},
                    {"val_acc", row.val_acc},
                    {"val_f1", row.val_f1},
                    {"epochs", opts.epochs},
                    {"batch_size", opts.batch_size},
                    {"adam", opts.adam},
                    {"focal_gamma", opts.focal.gamma},
                    {"augment_enabled", opts.augment_enabled},
                    {"augment", opts.augment}};
      model.set_training(false);
      result.checkpoint = capture_checkpoint(model, std::move(meta));
    }
  }
  return result;
}

void write_training_log(const std::filesystem::path& path, std::span<const EpochLog> log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,val_acc,val_f1,val_auc\n" << std::setprecision(8);
  for (const auto& r : log) {
    out << r.epoch << ',' << r.train_loss << ',' << r.val_acc << ',' << r.val_f1 << ',';
    if (!std::isnan(r.val_auc)) out << r.val_auc;
    out << '\n';
  }
}

}  // namespace ltbn
