#include "lighttbnet/clahe.hpp"

#include <algorithm>
#include <cmath>

namespace ltbn {

void ClaheConfig::validate() const {
  if (tiles_x < 1 || tiles_y < 1) throw std::invalid_argument("clahe: tile grid must be at least 1x1");
  if (!(clip_limit >= 1.0)) throw std::invalid_argument("clahe: clip_limit must be >= 1");
  if (bins < 2 || bins > 256) throw std::invalid_argument("clahe: bins must be in [2,256]");
}

std::uint32_t clahe_clip_count(double clip_limit, std::size_t tile_pixels, int bins) {
  if (std::isinf(clip_limit)) return static_cast<std::uint32_t>(tile_pixels);
  const double c = std::floor(clip_limit * static_cast<double>(tile_pixels) / bins);
  return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(c));
}

void clip_histogram(std::span<std::uint32_t> hist, std::uint32_t limit) {
  const std::size_t nbins = hist.size();
  std::uint64_t excess = 0;
  for (auto& h : hist) {
    if (h > limit) {
      excess += h - limit;
      h = limit;
    }
  }
  if (excess == 0) return;

  const auto batch = static_cast<std::uint32_t>(excess / nbins);
  for (auto& h : hist) {
    const std::uint32_t add = std::min(batch, limit - h);
    h += add;
    excess -= add;
  }

  // Spread the remainder evenly over bins still below the limit.
  while (excess > 0) {
    std::uint64_t below = 0;
    for (auto h : hist) below += h < limit;
    if (below == 0) break;
    const std::size_t step = std::max<std::size_t>(1, nbins / std::min<std::uint64_t>(excess, nbins));
    bool changed = false;
    for (std::size_t start = 0; start < step && excess > 0; ++start) {
      for (std::size_t i = start; i < nbins && excess > 0; i += step) {
        if (hist[i] < limit) {
          ++hist[i];
          --excess;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  for (std::size_t i = 0; excess > 0; i = (i + 1) % nbins) {
    ++hist[i];
    --excess;
  }
}

namespace {

// Reflect-101: index -1 maps to 1, n maps to n - 2.
int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

}  // namespace

GrayImage8 clahe(const GrayImage8& img, const ClaheConfig& cfg, ClaheTrace* trace) {
  cfg.validate();
  if (img.empty()) throw ImageError("clahe: empty image");
  if (img.width < cfg.tiles_x || img.height < cfg.tiles_y) {
    throw ImageError("clahe: image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                     " smaller than tile grid");
  }
  const int tw = (img.width + cfg.tiles_x - 1) / cfg.tiles_x;
  const int th = (img.height + cfg.tiles_y - 1) / cfg.tiles_y;
  const std::size_t tile_pixels = static_cast<std::size_t>(tw) * static_cast<std::size_t>(th);
  const int nbins = cfg.bins;
  const std::uint32_t limit = clahe_clip_count(cfg.clip_limit, tile_pixels, nbins);
  auto bin_of = [nbins](std::uint8_t v) { return static_cast<int>(v) * nbins / 256; };

  if (trace) {
    trace->clip_count = limit;
    trace->tile_pixels = tile_pixels;
    trace->clipped.clear();
  }

  // luts[tile][bin] -> output intensity
  const std::size_t ntiles = static_cast<std::size_t>(cfg.tiles_x) * static_cast<std::size_t>(cfg.tiles_y);
  std::vector<std::vector<float>> luts(ntiles, std::vector<float>(static_cast<std::size_t>(nbins)));
  std::vector<std::uint32_t> hist(static_cast<std::size_t>(nbins));
  const double scale = 255.0 / static_cast<double>(tile_pixels);
  for (int ty = 0; ty < cfg.tiles_y; ++ty) {
    for (int tx = 0; tx < cfg.tiles_x; ++tx) {
      std::fill(hist.begin(), hist.end(), 0u);
      for (int y = ty * th; y < (ty + 1) * th; ++y) {
        const int sy = reflect101(y, img.height);
        for (int x = tx * tw; x < (tx + 1) * tw; ++x) {
          ++hist[static_cast<std::size_t>(bin_of(img.at(reflect101(x, img.width), sy)))];
        }
      }
      auto& lut = luts[static_cast<std::size_t>(ty * cfg.tiles_x + tx)];
      const auto occupied = std::count_if(hist.begin(), hist.end(), [](std::uint32_t h) { return h > 0; });
      if (occupied == 1) {
        // Degenerate histogram: keep intensities unchanged.
        for (int b = 0; b < nbins; ++b) lut[static_cast<std::size_t>(b)] = static_cast<float>(b) * 256.0f / nbins;
        if (trace) trace->clipped.push_back(hist);
        continue;
      }
      clip_histogram(hist, limit);
      if (trace) trace->clipped.push_back(hist);
      std::uint64_t cdf = 0;
      for (int b = 0; b < nbins; ++b) {
        cdf += hist[static_cast<std::size_t>(b)];
        lut[static_cast<std::size_t>(b)] = static_cast<float>(std::min(255.0, std::round(cdf * scale)));
      }
    }
  }

  GrayImage8 out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const double tyf = static_cast<double>(y) / th - 0.5;
    int ty1 = static_cast<int>(std::floor(tyf));
    const double ya = tyf - ty1;
    int ty2 = ty1 + 1;
    ty1 = std::max(ty1, 0);
    ty2 = std::min(ty2, cfg.tiles_y - 1);
    for (int x = 0; x < img.width; ++x) {
      const double txf = static_cast<double>(x) / tw - 0.5;
      int tx1 = static_cast<int>(std::floor(txf));
      const double xa = txf - tx1;
      int tx2 = tx1 + 1;
      tx1 = std::max(tx1, 0);
      tx2 = std::min(tx2, cfg.tiles_x - 1);
      const auto b = static_cast<std::size_t>(bin_of(img.at(x, y)));
      const auto& l11 = luts[static_cast<std::size_t>(ty1 * cfg.tiles_x + tx1)];
      const auto& l12 = luts[static_cast<std::size_t>(ty1 * cfg.tiles_x + tx2)];
      const auto& l21 = luts[static_cast<std::size_t>(ty2 * cfg.tiles_x + tx1)];
      const auto& l22 = luts[static_cast<std::size_t>(ty2 * cfg.tiles_x + tx2)];
      double v;
      if (l11[b] == l12[b] && l11[b] == l21[b] && l11[b] == l22[b]) {
        v = l11[b];
      } else {
        v = (l11[b] * (1.0 - xa) + l12[b] * xa) * (1.0 - ya) + (l21[b] * (1.0 - xa) + l22[b] * xa) * ya;
      }
      out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace ltbn
