#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lighttbnet/image.hpp"
#include "lighttbnet/model.hpp"

namespace ltbn {

/// Per-pixel relevance in [0,1] plus where it came from.
struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major
  std::string method;         // "saliency" or "gradcam"
  std::string target_layer;
  int class_index = 1;
  double score = 0;  // TB probability of the explained prediction

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Divides by the maximum so the peak becomes 1. An all-zero input stays zero.
void max_normalize(std::span<float> values);

/// Maps a [B=1, ...] input tensor to a rank-0 score.
using ScoreFn = std::function<TensorF(const TensorF&)>;

/// |d score / d input| per element of a [1,1,H,W] input, max-normalized.
Heatmap saliency(const ScoreFn& score, const TensorF& input);

/// Saliency of the softmax TB probability for one preprocessed image.
/// The image is standardized exactly as in training; the model runs in eval mode.
Heatmap saliency(LightTBNet<float>& model, const GrayImageF& image);

/// ReLU(sum_c w_c * A_c) with w_c the spatial mean of dY/dA_c, for an
/// activation and gradient of shape [1,C,h,w]. Not normalized, not resized.
/// Throws ShapeError unless the target has spatial extent.
std::vector<float> gradcam_from(const TensorF& activation, std::span<const float> grad);

/// Grad-CAM of the TB logit at the last residual block output, bilinearly
/// upsampled to the image size and max-normalized.
Heatmap gradcam(LightTBNet<float>& model, const GrayImageF& image);

/// Hot colormap: black -> red -> yellow -> white, piecewise linear in thirds.
std::array<std::uint8_t, 3> hot_color(float t);

inline constexpr double kOverlayAlpha = 0.6;

/// Blend of a grayscale base with a heatmap:
/// out = (1 - a*h) * base + a*h * hot(h), with a = kOverlayAlpha.
RgbImage overlay(const GrayImageF& base, const Heatmap& heat);

/// "score=0.8215" style label, four decimals.
std::string score_label(double score);

/// Writes a three-panel PNG (base | saliency overlay | grad-CAM overlay)
/// with the TB score in a "score" tEXt chunk, plus `<out_path>.txt`
/// holding the score label. Returns the sidecar path.
std::filesystem::path render_overlay(const GrayImageF& base, const Heatmap& saliency_map, const Heatmap& gradcam_map,
                                     double score, const std::filesystem::path& out_path);

}  // namespace ltbn
