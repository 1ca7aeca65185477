#include "lighttbnet/preprocess.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ltbn {

void PreprocessConfig::validate() const {
  clahe.validate();
  if (size < 2) throw std::invalid_argument("preprocess: size must be >= 2");
}

void to_json(nlohmann::json& j, const PreprocessConfig& c) {
  // Infinity is not representable in JSON; null means "no clipping".
  nlohmann::json clip = std::isinf(c.clahe.clip_limit) ? nlohmann::json(nullptr) : nlohmann::json(c.clahe.clip_limit);
  j = nlohmann::json{{"clahe", {{"enabled", c.clahe_enabled},
                                {"tiles_x", c.clahe.tiles_x},
                                {"tiles_y", c.clahe.tiles_y},
                                {"clip_limit", clip},
                                {"bins", c.clahe.bins},
                                {"after_resize", c.clahe_after_resize}}},
                     {"size", c.size}};
}

void from_json(const nlohmann::json& j, PreprocessConfig& c) {
  c = PreprocessConfig{};
  c.size = j.value("size", c.size);
  if (j.contains("clahe")) {
    const auto& k = j.at("clahe");
    c.clahe_enabled = k.value("enabled", c.clahe_enabled);
    c.clahe.tiles_x = k.value("tiles_x", c.clahe.tiles_x);
    c.clahe.tiles_y = k.value("tiles_y", c.clahe.tiles_y);
    if (k.contains("clip_limit")) {
      c.clahe.clip_limit = k.at("clip_limit").is_null() ? std::numeric_limits<double>::infinity()
                                                        : k.at("clip_limit").get<double>();
    }
    c.clahe.bins = k.value("bins", c.clahe.bins);
    c.clahe_after_resize = k.value("after_resize", c.clahe_after_resize);
  }
}

void to_json(nlohmann::json& j, const AugmentConfig& c) {
  j = nlohmann::json{{"flip_prob", c.flip_prob},
                     {"rotation_deg", c.rotation_deg},
                     {"shift_frac", c.shift_frac},
                     {"scale_frac", c.scale_frac},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, AugmentConfig& c) {
  c = AugmentConfig{};
  c.flip_prob = j.value("flip_prob", c.flip_prob);
  c.rotation_deg = j.value("rotation_deg", c.rotation_deg);
  c.shift_frac = j.value("shift_frac", c.shift_frac);
  c.scale_frac = j.value("scale_frac", c.scale_frac);
  c.seed = j.value("seed", c.seed);
}

GrayImageF preprocess(const GrayImage8& img, const PreprocessConfig& cfg) {
  cfg.validate();
  if (!cfg.clahe_enabled) return resize_bilinear(to_float(img), cfg.size, cfg.size);
  if (cfg.clahe_after_resize) return to_float(clahe(resize_bilinear(img, cfg.size, cfg.size), cfg.clahe));
  return resize_bilinear(to_float(clahe(img, cfg.clahe)), cfg.size, cfg.size);
}

InMemorySource::InMemorySource(std::vector<GrayImageF> images, std::vector<int> labels)
    : images_(std::move(images)), labels_(std::move(labels)) {
  if (images_.size() != labels_.size()) throw std::invalid_argument("InMemorySource: images/labels size mismatch");
}

void InMemorySource::add(GrayImageF img, int label) {
  images_.push_back(std::move(img));
  labels_.push_back(label);
}

ManifestSource::ManifestSource(std::vector<SampleRecord> records, PreprocessConfig cfg)
    : records_(std::move(records)), cfg_(std::move(cfg)), cache_(records_.size()) {
  cfg_.validate();
}

GrayImageF ManifestSource::image(std::size_t i) const {
  {
    std::lock_guard lock(mu_);
    if (cache_.at(i)) return *cache_[i];
  }
  auto img = preprocess(read_gray_image(records_[i].image_path), cfg_);
  std::lock_guard lock(mu_);
  cache_[i] = img;
  return img;
}

TensorF make_batch(const SampleSource& src, std::span<const std::size_t> indices, const AugmentConfig* augment,
                   int epoch) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  std::vector<float> data;
  int w = 0, h = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    auto img = src.image(indices[k]);
    if (k == 0) {
      w = img.width;
      h = img.height;
      data.reserve(indices.size() * img.size());
    } else if (img.width != w || img.height != h) {
      throw ShapeError("make_batch: images of different sizes in one batch");
    }
    if (augment) {
      std::mt19937_64 rng(stream_seed(augment->seed, static_cast<std::uint64_t>(epoch), indices[k]));
      img = ltbn::augment(img, *augment, rng);
    }
    const auto norm = normalize(img);
    data.insert(data.end(), norm.begin(), norm.end());
  }
  return TensorF::from({indices.size(), 1, static_cast<std::size_t>(h), static_cast<std::size_t>(w)},
                       std::move(data));
}

std::vector<int> batch_labels(const SampleSource& src, std::span<const std::size_t> indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(src.label(i));
  return out;
}

}  // namespace ltbn
