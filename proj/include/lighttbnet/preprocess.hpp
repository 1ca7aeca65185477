#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "lighttbnet/augment.hpp"
#include "lighttbnet/clahe.hpp"
#include "lighttbnet/data.hpp"
#include "lighttbnet/image.hpp"
#include "lighttbnet/tensor.hpp"

namespace ltbn {

struct PreprocessConfig {
  ClaheConfig clahe;
  bool clahe_enabled = true;
  /// Default applies CLAHE at native resolution, then resizes.
  bool clahe_after_resize = false;
  int size = 256;

  void validate() const;
};

void to_json(nlohmann::json& j, const PreprocessConfig& c);
void from_json(const nlohmann::json& j, PreprocessConfig& c);
void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

/// CLAHE + bilinear resize to size x size, returned as a [0,1] float image.
GrayImageF preprocess(const GrayImage8& img, const PreprocessConfig& cfg);

/// Indexed, labelled images already passed through `preprocess` (before
/// augmentation and normalization).
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual int label(std::size_t i) const = 0;
  virtual GrayImageF image(std::size_t i) const = 0;
};

/// Holds preprocessed images in memory.
class InMemorySource : public SampleSource {
 public:
  InMemorySource() = default;
  InMemorySource(std::vector<GrayImageF> images, std::vector<int> labels);
  void add(GrayImageF img, int label);

  std::size_t size() const override { return images_.size(); }
  int label(std::size_t i) const override { return labels_.at(i); }
  GrayImageF image(std::size_t i) const override { return images_.at(i); }

 private:
  std::vector<GrayImageF> images_;
  std::vector<int> labels_;
};

/// Decodes manifest images on first access and caches the preprocessed
/// result. Safe for concurrent readers.
class ManifestSource : public SampleSource {
 public:
  ManifestSource(std::vector<SampleRecord> records, PreprocessConfig cfg);

  std::size_t size() const override { return records_.size(); }
  int label(std::size_t i) const override { return records_.at(i).label; }
  GrayImageF image(std::size_t i) const override;
  const std::vector<SampleRecord>& records() const { return records_; }

 private:
  std::vector<SampleRecord> records_;
  PreprocessConfig cfg_;
  mutable std::vector<std::optional<GrayImageF>> cache_;
  mutable std::mutex mu_;
};

/// Stacks normalized images into [B,1,H,W]. When `augment` is given, each
/// sample is augmented with its own stream seeded by (seed, epoch, index).
TensorF make_batch(const SampleSource& src, std::span<const std::size_t> indices,
                   const AugmentConfig* augment = nullptr, int epoch = 0);

std::vector<int> batch_labels(const SampleSource& src, std::span<const std::size_t> indices);

}  // namespace ltbn
