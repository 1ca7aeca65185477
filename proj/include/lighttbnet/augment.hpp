#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "lighttbnet/image.hpp"

namespace ltbn {

struct AugmentConfig {
  double flip_prob = 0.5;
  double rotation_deg = 15.0;  // angle ~ U(-r, r)
  double shift_frac = 0.10;    // per axis ~ U(-s, s) of the image extent
  double scale_frac = 0.10;    // zoom factor 1 + U(-z, z)
  std::uint64_t seed = 0;

  void validate() const;
};

/// One draw of augmentation parameters.
struct AffineDraw {
  bool flip = false;
  double angle_deg = 0.0;
  double shift_x = 0.0;  // fraction of width
  double shift_y = 0.0;  // fraction of height
  double scale = 0.0;    // zoom = 1 + scale
};

AffineDraw draw_affine(const AugmentConfig& cfg, std::mt19937_64& rng);

/// Forward map of a pixel position under `d`, in pixel coordinates about the
/// image centre ((w-1)/2, (h-1)/2): flip x, rotate (x right, y down, so a
/// positive angle turns clockwise on screen), translate, then zoom.
std::array<double, 2> affine_forward(const AffineDraw& d, int width, int height, double x, double y);

/// Resamples `img` through the inverse of the composed map with bilinear
/// interpolation; samples outside the source read as zero.
GrayImageF apply_affine(const GrayImageF& img, const AffineDraw& d);

/// draw_affine + apply_affine.
GrayImageF augment(const GrayImageF& img, const AugmentConfig& cfg, std::mt19937_64& rng);

/// Deterministic 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t x);
/// Seed for the RNG stream of one sample in one epoch.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t epoch, std::uint64_t stream);

}  // namespace ltbn
