#include "lighttbnet/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ltbn {

namespace {

// Explanations need a graph even when the caller disabled recording.
class GradEnabledScope {
 public:
  GradEnabledScope() : prev_(GradMode::enabled()) { GradMode::set_enabled(true); }
  ~GradEnabledScope() { GradMode::set_enabled(prev_); }
  GradEnabledScope(const GradEnabledScope&) = delete;
  GradEnabledScope& operator=(const GradEnabledScope&) = delete;

 private:
  bool prev_;
};

// Puts the model in eval mode and clears parameter grads on exit.
class EvalScope {
 public:
  explicit EvalScope(LightTBNet<float>& m) : model_(m), was_training_(m.training()) { m.set_training(false); }
  ~EvalScope() {
    model_.zero_grad();
    model_.set_training(was_training_);
  }
  EvalScope(const EvalScope&) = delete;
  EvalScope& operator=(const EvalScope&) = delete;

 private:
  LightTBNet<float>& model_;
  bool was_training_;
};

TensorF image_input(const GrayImageF& image, bool requires_grad) {
  return TensorF::from({1, 1, static_cast<std::size_t>(image.height), static_cast<std::size_t>(image.width)},
                       normalize(image), requires_grad);
}

TensorF tb_column(const TensorF& rows) {
  static const int kTb[] = {1};
  return sum(pick_columns(rows, std::span<const int>(kTb)));
}

}  // namespace

void max_normalize(std::span<float> values) {
  float peak = 0;
  for (float v : values) peak = std::max(peak, v);
  if (peak <= 0) return;
  for (auto& v : values) v /= peak;
}

Heatmap saliency(const ScoreFn& score_fn, const TensorF& input) {
  if (input.rank() != 4 || input.dim(0) != 1 || input.dim(1) != 1) {
    throw ShapeError("saliency: expected a [1,1,H,W] input, got " + shape_str(input.shape()));
  }
  GradEnabledScope grad_on;
  TensorF x = TensorF::from(input.shape(), std::vector<float>(input.data().begin(), input.data().end()), true);
  auto score = score_fn(x);
  if (score.rank() != 0) throw ShapeError("saliency: score must be rank-0");
  Heatmap h;
  h.method = "saliency";
  h.target_layer = "input";
  h.score = score.item();
  h.height = static_cast<int>(input.dim(2));
  h.width = static_cast<int>(input.dim(3));
  h.values.assign(x.numel(), 0.0f);
  if (score.requires_grad()) {
    score.backward();
    if (x.has_grad()) {
      const auto g = x.grad();
      for (std::size_t i = 0; i < g.size(); ++i) h.values[i] = std::fabs(g[i]);
    }
  }
  max_normalize(h.values);
  return h;
}

Heatmap saliency(LightTBNet<float>& model, const GrayImageF& image) {
  EvalScope eval(model);
  return saliency([&](const TensorF& x) { return tb_column(model.forward(x)); }, image_input(image, false));
}

std::vector<float> gradcam_from(const TensorF& activation, std::span<const float> grad) {
  if (activation.rank() != 4 || activation.dim(0) != 1) {
    throw ShapeError("grad-CAM: target layer has no spatial extent (shape " + shape_str(activation.shape()) + ")");
  }
  if (grad.size() != activation.numel()) throw ShapeError("grad-CAM: gradient size does not match activation");
  const std::size_t c = activation.dim(1), hw = activation.dim(2) * activation.dim(3);
  const auto a = activation.data();
  std::vector<double> acc(hw, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    double w = 0;
    for (std::size_t i = 0; i < hw; ++i) w += grad[k * hw + i];
    w /= static_cast<double>(hw);
    for (std::size_t i = 0; i < hw; ++i) acc[i] += w * a[k * hw + i];
  }
  std::vector<float> out(hw);
  for (std::size_t i = 0; i < hw; ++i) out[i] = static_cast<float>(std::max(0.0, acc[i]));
  return out;
}

Heatmap gradcam(LightTBNet<float>& model, const GrayImageF& image) {
  EvalScope eval(model);
  GradEnabledScope grad_on;
  model.zero_grad();
  auto tr = model.trace(image_input(image, false));
  const double score = tr.probs.at({0, 1});
  auto target = tb_column(tr.logits);
  target.backward();

  const int h = static_cast<int>(tr.last_block.dim(2)), w = static_cast<int>(tr.last_block.dim(3));
  std::vector<float> zeros;
  std::span<const float> grad = tr.last_block.grad();
  if (!tr.last_block.has_grad()) {
    zeros.assign(tr.last_block.numel(), 0.0f);
    grad = zeros;
  }
  GrayImageF coarse(w, h);
  coarse.pixels = gradcam_from(tr.last_block, grad);

  GrayImageF fine;
  if (w == image.width && h == image.height) {
    fine = coarse;
  } else if (w * h == 1) {
    fine = GrayImageF(image.width, image.height, coarse.pixels[0]);
  } else {
    fine = resize_bilinear(coarse, image.width, image.height);
  }

  Heatmap out;
  out.method = "gradcam";
  out.target_layer = "blocks." + std::to_string(model.config().n_blocks - 1);
  out.score = score;
  out.width = image.width;
  out.height = image.height;
  out.values = std::move(fine.pixels);
  for (auto& v : out.values) v = std::max(v, 0.0f);
  max_normalize(out.values);
  return out;
}

std::array<std::uint8_t, 3> hot_color(float t) {
  t = std::clamp(t, 0.0f, 1.0f);
  auto ch = [](float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); };
  return {ch(3 * t), ch(3 * t - 1), ch(3 * t - 2)};
}

RgbImage overlay(const GrayImageF& base, const Heatmap& heat) {
  if (heat.width != base.width || heat.height != base.height) {
    throw ShapeError("overlay: heatmap " + std::to_string(heat.width) + "x" + std::to_string(heat.height) +
                     " does not match image " + std::to_string(base.width) + "x" + std::to_string(base.height));
  }
  RgbImage out(base.width, base.height);
  for (int y = 0; y < base.height; ++y) {
    for (int x = 0; x < base.width; ++x) {
      const double g = std::clamp(static_cast<double>(base.at(x, y)), 0.0, 1.0) * 255.0;
      const double a = kOverlayAlpha * std::clamp(static_cast<double>(heat.at(x, y)), 0.0, 1.0);
      const auto hot = hot_color(heat.at(x, y));
      auto* p = out.px(x, y);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<std::uint8_t>(std::lround((1.0 - a) * g + a * hot[c]));
    }
  }
  return out;
}

std::string score_label(double score) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "score=%.4f", score);
  return buf;
}

std::filesystem::path render_overlay(const GrayImageF& base, const Heatmap& saliency_map, const Heatmap& gradcam_map,
                                     double score, const std::filesystem::path& out_path) {
  const auto sal = overlay(base, saliency_map);
  const auto cam = overlay(base, gradcam_map);
  const int w = base.width, h = base.height;
  RgbImage panel(3 * w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(base.at(x, y), 0.0f, 1.0f) * 255.0f));
      auto* p0 = panel.px(x, y);
      p0[0] = p0[1] = p0[2] = g;
      std::copy_n(sal.px(x, y), 3, panel.px(w + x, y));
      std::copy_n(cam.px(x, y), 3, panel.px(2 * w + x, y));
    }
  }
  const auto label = score_label(score);
  write_png(out_path, panel, {{"score", label.substr(6)}, {"panels", "preprocessed|saliency|gradcam"}});
  auto sidecar = out_path;
  sidecar += ".txt";
  std::ofstream txt(sidecar);
  if (!txt) throw ImageError("cannot write " + sidecar.string());
  txt << label << '\n';
  if (!txt) throw ImageError("write failed for " + sidecar.string());
  return sidecar;
}

}  // namespace ltbn
