#include "lighttbnet/augment.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lighttbnet/layers.hpp"

namespace ltbn {

void AugmentConfig::validate() const {
  if (flip_prob < 0.0 || flip_prob > 1.0) throw std::invalid_argument("augment: flip_prob must be in [0,1]");
  if (rotation_deg < 0.0 || shift_frac < 0.0 || scale_frac < 0.0 || scale_frac >= 1.0) {
    throw std::invalid_argument("augment: ranges must be non-negative (scale_frac < 1)");
  }
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t stream) {
  return mix_seed(mix_seed(seed ^ mix_seed(epoch)) ^ stream);
}

AffineDraw draw_affine(const AugmentConfig& cfg, std::mt19937_64& rng) {
  auto sym = [&](double r) { return (2.0 * uniform01(rng) - 1.0) * r; };
  AffineDraw d;
  d.flip = uniform01(rng) < cfg.flip_prob;
  d.angle_deg = sym(cfg.rotation_deg);
  d.shift_x = sym(cfg.shift_frac);
  d.shift_y = sym(cfg.shift_frac);
  d.scale = sym(cfg.scale_frac);
  return d;
}

std::array<double, 2> affine_forward(const AffineDraw& d, int width, int height, double x, double y) {
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  double u = x - cx, v = y - cy;
  if (d.flip) u = -u;
  const double th = d.angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  double ru = c * u - s * v, rv = s * u + c * v;
  ru += d.shift_x * width;
  rv += d.shift_y * height;
  const double z = 1.0 + d.scale;
  return {cx + z * ru, cy + z * rv};
}

GrayImageF apply_affine(const GrayImageF& img, const AffineDraw& d) {
  const int w = img.width, h = img.height;
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double th = d.angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), s = std::sin(th);
  const double z = 1.0 + d.scale;
  const bool identity_rot = d.angle_deg == 0.0;

  auto sample = [&](int x, int y) -> double {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : img.at(x, y);
  };

  GrayImageF out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Invert zoom, translation, rotation, flip in that order.
      double qu = (x - cx) / z - d.shift_x * w;
      double qv = (y - cy) / z - d.shift_y * h;
      double u = identity_rot ? qu : c * qu + s * qv;
      double v = identity_rot ? qv : -s * qu + c * qv;
      if (d.flip) u = -u;
      const double sx = cx + u, sy = cy + v;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const double ax = sx - fx, ay = sy - fy;
      double val = sample(x0, y0) * (1.0 - ax) * (1.0 - ay);
      if (ax != 0.0) val += sample(x0 + 1, y0) * ax * (1.0 - ay);
      if (ay != 0.0) val += sample(x0, y0 + 1) * (1.0 - ax) * ay;
      if (ax != 0.0 && ay != 0.0) val += sample(x0 + 1, y0 + 1) * ax * ay;
      out.at(x, y) = static_cast<float>(val);
    }
  }
  return out;
}

GrayImageF augment(const GrayImageF& img, const AugmentConfig& cfg, std::mt19937_64& rng) {
  return apply_affine(img, draw_affine(cfg, rng));
}

}  // namespace ltbn
