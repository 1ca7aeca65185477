#include "lighttbnet/model.hpp"

#include <stdexcept>

namespace ltbn {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
  if (n_blocks < 2 || n_blocks > 6) fail("n_blocks must be in [2,6], got " + std::to_string(n_blocks));
  if (static_cast<int>(channel_plan.size()) != n_blocks) {
    fail("channel_plan has " + std::to_string(channel_plan.size()) + " entries for " +
         std::to_string(n_blocks) + " blocks");
  }
  if (input_size <= 0 || input_size % (1 << n_blocks) != 0) {
    fail("input_size " + std::to_string(input_size) + " is not divisible by 2^" + std::to_string(n_blocks));
  }
  if (input_channels < 1) fail("input_channels must be >= 1");
  for (int w : channel_plan) {
    if (w < 1) fail("channel widths must be >= 1");
  }
  if (reduce_channels < 1) fail("reduce_channels must be >= 1");
  if (fc_hidden < 1) fail("fc_hidden must be >= 1");
  if (n_classes != 2) fail("n_classes must be 2");
}

std::size_t ModelConfig::flatten_size() const {
  const auto s = static_cast<std::size_t>(final_map_size());
  return static_cast<std::size_t>(reduce_channels) * s * s;
}

ModelConfig default_model_config(int n_blocks) {
  static const int widths[] = {32, 64, 128, 128, 128, 128};
  ModelConfig c;
  c.n_blocks = n_blocks;
  if (n_blocks >= 1 && n_blocks <= 6) c.channel_plan.assign(widths, widths + n_blocks);
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"n_blocks", c.n_blocks},
                     {"input_size", c.input_size},
                     {"input_channels", c.input_channels},
                     {"channel_plan", c.channel_plan},
                     {"reduce_channels", c.reduce_channels},
                     {"fc_hidden", c.fc_hidden},
                     {"n_classes", c.n_classes},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.n_blocks = j.value("n_blocks", d.n_blocks);
  c.input_size = j.value("input_size", d.input_size);
  c.input_channels = j.value("input_channels", d.input_channels);
  if (j.contains("channel_plan")) {
    c.channel_plan = j.at("channel_plan").get<std::vector<int>>();
  } else {
    c.channel_plan = default_model_config(c.n_blocks).channel_plan;
  }
  c.reduce_channels = j.value("reduce_channels", d.reduce_channels);
  c.fc_hidden = j.value("fc_hidden", d.fc_hidden);
  c.n_classes = j.value("n_classes", d.n_classes);
  c.seed = j.value("seed", d.seed);
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::ReLU: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::Concat: return "concat";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Linear: return "linear";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

std::vector<LayerSpec> describe_layers(const ModelConfig& config) {
  config.validate();
  std::vector<LayerSpec> out;
  auto sz = static_cast<std::size_t>(config.input_size);
  auto ch = static_cast<std::size_t>(config.input_channels);
  for (int i = 0; i < config.n_blocks; ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    const auto w = static_cast<std::size_t>(config.channel_plan[static_cast<std::size_t>(i)]);
    const Shape in{ch, sz, sz};
    const Shape mid{w, sz, sz};
    out.push_back({p + "conv1", LayerKind::Conv, in, mid, 3, true});
    out.push_back({p + "relu1", LayerKind::ReLU, mid, mid, 0, false});
    out.push_back({p + "bn1", LayerKind::BatchNorm, mid, mid, 0, true});
    out.push_back({p + "conv2", LayerKind::Conv, mid, mid, 3, true});
    out.push_back({p + "relu2", LayerKind::ReLU, mid, mid, 0, false});
    out.push_back({p + "bn2", LayerKind::BatchNorm, mid, mid, 0, true});
    out.push_back({p + "skip", LayerKind::Conv, in, mid, 1, true});
    out.push_back({p + "concat", LayerKind::Concat, mid, Shape{2 * w, sz, sz}, 0, false});
    out.push_back({p + "pool", LayerKind::MaxPool, Shape{2 * w, sz, sz}, Shape{2 * w, sz / 2, sz / 2}, 2, false});
    ch = 2 * w;
    sz /= 2;
  }
  const auto r = static_cast<std::size_t>(config.reduce_channels);
  out.push_back({"reduce", LayerKind::Conv, Shape{ch, sz, sz}, Shape{r, sz, sz}, 1, true});
  const std::size_t flat = r * sz * sz;
  out.push_back({"flatten", LayerKind::Flatten, Shape{r, sz, sz}, Shape{flat}, 0, false});
  const auto h = static_cast<std::size_t>(config.fc_hidden);
  const auto k = static_cast<std::size_t>(config.n_classes);
  out.push_back({"fc1", LayerKind::Linear, Shape{flat}, Shape{h}, 0, true});
  out.push_back({"fc1.relu", LayerKind::ReLU, Shape{h}, Shape{h}, 0, false});
  out.push_back({"fc2", LayerKind::Linear, Shape{h}, Shape{k}, 0, true});
  out.push_back({"softmax", LayerKind::Softmax, Shape{k}, Shape{k}, 0, false});
  return out;
}

template <typename T>
ResidualBlock<T>::ResidualBlock(std::size_t in, std::size_t width, std::mt19937_64& rng)
    : conv1(in, width, 3, 1, rng),
      bn1(width),
      conv2(width, width, 3, 1, rng),
      bn2(width),
      skip(in, width, 1, 0, rng) {}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x) {
  auto main = bn1.forward(relu(conv1.forward(x)));
  main = bn2.forward(relu(conv2.forward(main)));
  auto shortcut = skip.forward(x);
  return pool.forward(concat_channels(main, shortcut));
}

template <typename T>
LightTBNet<T>::LightTBNet(const ModelConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  auto in = static_cast<std::size_t>(config_.input_channels);
  for (int w : config_.channel_plan) {
    blocks_.emplace_back(in, static_cast<std::size_t>(w), rng);
    in = 2 * static_cast<std::size_t>(w);
  }
  reduce_ = Conv2D<T>(in, static_cast<std::size_t>(config_.reduce_channels), 1, 0, rng);
  fc1_ = Linear<T>(config_.flatten_size(), static_cast<std::size_t>(config_.fc_hidden), rng);
  fc2_ = Linear<T>(static_cast<std::size_t>(config_.fc_hidden), static_cast<std::size_t>(config_.n_classes), rng);
}

template <typename T>
ForwardTrace<T> LightTBNet<T>::trace(const Tensor<T>& x) {
  const auto s = static_cast<std::size_t>(config_.input_size);
  if (x.rank() != 4 || x.dim(1) != static_cast<std::size_t>(config_.input_channels) || x.dim(2) != s ||
      x.dim(3) != s) {
    throw ShapeError("LightTBNet: expected input [B," + std::to_string(config_.input_channels) + "," +
                     std::to_string(s) + "," + std::to_string(s) + "], got " + shape_str(x.shape()));
  }
  ForwardTrace<T> t;
  Tensor<T> h = x;
  for (auto& b : blocks_) h = b.forward(h);
  t.last_block = h;
  h = flatten(reduce_.forward(h));
  h = relu(fc1_.forward(h));
  t.logits = fc2_.forward(h);
  t.probs = softmax_rows(t.logits);
  return t;
}

template <typename T>
void LightTBNet<T>::set_training(bool on) {
  training_ = on;
  for (auto& b : blocks_) {
    b.bn1.training = on;
    b.bn2.training = on;
  }
}

template <typename T>
std::vector<NamedTensor<T>> LightTBNet<T>::parameters() {
  std::vector<NamedTensor<T>> out;
  auto conv = [&](const std::string& n, Conv2D<T>& c) {
    out.push_back({n + ".weight", c.weight});
    out.push_back({n + ".bias", c.bias});
  };
  auto bn = [&](const std::string& n, BatchNorm2D<T>& b) {
    out.push_back({n + ".gamma", b.gamma});
    out.push_back({n + ".beta", b.beta});
  };
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    auto& b = blocks_[i];
    conv(p + "conv1", b.conv1);
    bn(p + "bn1", b.bn1);
    conv(p + "conv2", b.conv2);
    bn(p + "bn2", b.bn2);
    conv(p + "skip", b.skip);
  }
  conv("reduce", reduce_);
  out.push_back({"fc1.weight", fc1_.weight});
  out.push_back({"fc1.bias", fc1_.bias});
  out.push_back({"fc2.weight", fc2_.weight});
  out.push_back({"fc2.bias", fc2_.bias});
  return out;
}

template <typename T>
std::vector<std::pair<std::string, std::vector<T>*>> LightTBNet<T>::buffers() {
  std::vector<std::pair<std::string, std::vector<T>*>> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    for (auto [name, bn] : {std::pair{"bn1", &blocks_[i].bn1}, std::pair{"bn2", &blocks_[i].bn2}}) {
      out.emplace_back(p + name + ".running_mean", &bn->running_mean);
      out.emplace_back(p + name + ".running_var", &bn->running_var);
    }
  }
  return out;
}

template <typename T>
std::vector<std::string> LightTBNet<T>::layer_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    for (const char* n : {"conv1", "bn1", "conv2", "bn2", "skip"}) out.push_back(p + n);
  }
  out.insert(out.end(), {"reduce", "fc1", "fc2"});
  return out;
}

template <typename T>
std::size_t LightTBNet<T>::param_count() {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.numel();
  return n;
}

template <typename T>
void LightTBNet<T>::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template class LightTBNet<float>;
template class LightTBNet<double>;

}  // namespace ltbn
