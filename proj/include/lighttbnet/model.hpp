#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lighttbnet/layers.hpp"

namespace ltbn {

/// Architecture hyperparameters. `input_size` is the square side length;
/// the reference model uses 256.
struct ModelConfig {
  int n_blocks = 4;
  int input_size = 256;
  int input_channels = 1;
  std::vector<int> channel_plan{32, 64, 128, 128};
  int reduce_channels = 32;
  int fc_hidden = 128;
  int n_classes = 2;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
  /// Side length of the feature map after all blocks: input_size / 2^N.
  int final_map_size() const { return input_size >> n_blocks; }
  std::size_t flatten_size() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Defaults for N in [2,6]: block widths are the first N of
/// {32, 64, 128, 128, 128, 128}, reduce 32, hidden 128.
ModelConfig default_model_config(int n_blocks);

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

enum class LayerKind { Conv, BatchNorm, ReLU, MaxPool, Concat, Flatten, Linear, Softmax };
const char* layer_kind_name(LayerKind kind);

/// One node of the static layer plan used for shape inference and
/// MAC/parameter accounting.
struct LayerSpec {
  std::string name;
  LayerKind kind;
  Shape in_shape;   // per single image, [C,H,W] or [F]
  Shape out_shape;
  std::size_t kernel = 0;
  bool has_params = false;
};

/// Static layer sequence for one image of `config.input_size`. The skip
/// conv of block i reads the block input, not the preceding row.
std::vector<LayerSpec> describe_layers(const ModelConfig& config);

template <typename T>
struct ResidualBlock {
  Conv2D<T> conv1;
  BatchNorm2D<T> bn1;
  Conv2D<T> conv2;
  BatchNorm2D<T> bn2;
  Conv2D<T> skip;
  MaxPool2D pool;

  ResidualBlock() = default;
  ResidualBlock(std::size_t in, std::size_t width, std::mt19937_64& rng);

  /// main: conv3x3 -> ReLU -> BN -> conv3x3 -> ReLU -> BN
  /// skip: conv1x1; merged by channel concatenation, then 2x2 max-pool.
  Tensor<T> forward(const Tensor<T>& x);
};

template <typename T>
struct ForwardTrace {
  Tensor<T> last_block;  // output of the final residual block
  Tensor<T> logits;      // [B, n_classes]
  Tensor<T> probs;       // softmax(logits)
};

template <typename T>
class LightTBNet {
 public:
  explicit LightTBNet(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  /// x: [B, input_channels, input_size, input_size] -> probabilities [B, 2].
  /// Column 1 is the TB score.
  Tensor<T> forward(const Tensor<T>& x) { return trace(x).probs; }
  Tensor<T> forward_logits(const Tensor<T>& x) { return trace(x).logits; }
  ForwardTrace<T> trace(const Tensor<T>& x);

  void set_training(bool on);
  bool training() const { return training_; }

  /// Trainable tensors in checkpoint order: per block conv1, bn1, conv2,
  /// bn2, skip; then reduce, fc1, fc2. Weight before bias, gamma before beta.
  std::vector<NamedTensor<T>> parameters();
  /// BatchNorm running statistics, "<layer>.running_mean"/"running_var".
  std::vector<std::pair<std::string, std::vector<T>*>> buffers();
  /// Layer names in the same order (13 for N=2).
  std::vector<std::string> layer_names() const;
  std::size_t param_count();

  void zero_grad();

  std::vector<ResidualBlock<T>>& blocks() { return blocks_; }
  Conv2D<T>& reduce() { return reduce_; }
  Linear<T>& fc1() { return fc1_; }
  Linear<T>& fc2() { return fc2_; }

 private:
  ModelConfig config_;
  bool training_ = true;
  std::vector<ResidualBlock<T>> blocks_;
  Conv2D<T> reduce_;
  Linear<T> fc1_;
  Linear<T> fc2_;
};

}  // namespace ltbn
