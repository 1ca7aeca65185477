#include "lighttbnet/image.hpp"

#include <algorithm>
#include <cmath>

namespace ltbn {

GrayImageF to_float(const GrayImage8& img) {
  GrayImageF out(img.width, img.height);
  for (std::size_t i = 0; i < img.size(); ++i) out.pixels[i] = static_cast<float>(img.pixels[i]) / 255.0f;
  return out;
}

GrayImage8 to_u8(const GrayImageF& img) {
  GrayImage8 out(img.width, img.height);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float v = std::round(img.pixels[i] * 255.0f);
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
  }
  return out;
}

namespace {

struct Tap {
  int i0, i1;
  float w1;  // weight of i1
};

std::vector<Tap> taps(int src, int dst) {
  std::vector<Tap> out(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    double s = (d + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src - 1);
    out[static_cast<std::size_t>(d)] = {i0, i1, static_cast<float>(s - i0)};
  }
  return out;
}

}  // namespace

GrayImageF resize_bilinear(const GrayImageF& img, int width, int height) {
  if (img.width < 1 || img.height < 1 || img.width * img.height < 2) {
    throw ImageError("resize: degenerate source " + std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  if (width < 1 || height < 1) throw ImageError("resize: invalid target size");
  if (width == img.width && height == img.height) return img;
  const auto tx = taps(img.width, width);
  const auto ty = taps(img.height, height);
  GrayImageF out(width, height);
  for (int y = 0; y < height; ++y) {
    const auto& vy = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const auto& vx = tx[static_cast<std::size_t>(x)];
      const float top = img.at(vx.i0, vy.i0) * (1.0f - vx.w1) + img.at(vx.i1, vy.i0) * vx.w1;
      const float bot = img.at(vx.i0, vy.i1) * (1.0f - vx.w1) + img.at(vx.i1, vy.i1) * vx.w1;
      out.at(x, y) = top * (1.0f - vy.w1) + bot * vy.w1;
    }
  }
  return out;
}

GrayImage8 resize_bilinear(const GrayImage8& img, int width, int height) {
  if (width == img.width && height == img.height && !img.empty()) return img;
  return to_u8(resize_bilinear(to_float(img), width, height));
}

std::vector<float> normalize(const GrayImageF& img) {
  if (img.empty()) throw ImageError("normalize: empty image");
  double s = 0;
  for (float v : img.pixels) s += v;
  const double mu = s / static_cast<double>(img.size());
  double ss = 0;
  for (float v : img.pixels) ss += (v - mu) * (v - mu);
  const double sd = std::max(std::sqrt(ss / static_cast<double>(img.size())), 1e-7);
  std::vector<float> out(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = static_cast<float>((img.pixels[i] - mu) / sd);
  return out;
}

}  // namespace ltbn
