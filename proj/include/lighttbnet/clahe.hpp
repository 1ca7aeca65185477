#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "lighttbnet/image.hpp"

namespace ltbn {

struct ClaheConfig {
  int tiles_x = 8;
  int tiles_y = 8;
  /// Multiple of the uniform bin height (tile_pixels / bins). Infinity
  /// disables clipping, which reduces CLAHE to tiled histogram equalization.
  double clip_limit = 2.0;
  int bins = 256;

  void validate() const;
};

/// Absolute per-bin clip count: max(1, floor(clip_limit * tile_pixels / bins)).
/// Returns the tile pixel count itself when clipping is disabled.
std::uint32_t clahe_clip_count(double clip_limit, std::size_t tile_pixels, int bins);

/// Clips every bin to `limit` and redistributes the excess: an equal share
/// to every bin (never pushing a bin past `limit`), then the remainder one
/// count at a time over bins still below `limit`. If all bins are full the
/// final remainder is spread unconditionally, so no bin ends above limit + 1.
void clip_histogram(std::span<std::uint32_t> hist, std::uint32_t limit);

/// Optional per-tile record of the clipped histograms, for diagnostics.
struct ClaheTrace {
  std::uint32_t clip_count = 0;
  std::size_t tile_pixels = 0;
  std::vector<std::vector<std::uint32_t>> clipped;
};

/// Contrast-limited adaptive histogram equalization. The image is padded by
/// reflection (edge pixel not repeated) up to a multiple of the tile grid;
/// tile mappings are bilinearly interpolated between tile centres. A tile
/// whose pixels all share one intensity keeps the identity mapping, so
/// constant images are fixed points.
GrayImage8 clahe(const GrayImage8& img, const ClaheConfig& cfg, ClaheTrace* trace = nullptr);

}  // namespace ltbn
