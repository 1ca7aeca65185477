#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltbn {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-channel row-major image. 8-bit storage images hold [0,255];
/// float working images hold [0,1].
template <typename P>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<P> pixels;

  Image() = default;
  Image(int w, int h, P fill = P{}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  bool empty() const { return pixels.empty(); }
  std::size_t size() const { return pixels.size(); }
  P& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const P& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const Image&) const = default;
};

using GrayImage8 = Image<std::uint8_t>;
using GrayImageF = Image<float>;

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // interleaved

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}
  std::uint8_t* px(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* px(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

GrayImageF to_float(const GrayImage8& img);
/// Rounds to nearest and saturates to [0,255].
GrayImage8 to_u8(const GrayImageF& img);

/// Bilinear resize with the align-corners=false convention: destination
/// pixel centre (x + 0.5) * (src/dst) - 0.5, clamped to the source edge.
GrayImageF resize_bilinear(const GrayImageF& img, int width, int height);
GrayImage8 resize_bilinear(const GrayImage8& img, int width, int height);

/// Per-image standardization (x - mean) / max(std, 1e-7), population std.
std::vector<float> normalize(const GrayImageF& img);

// File I/O. Reading accepts 8/16-bit PNG (gray, palette or colour; colour is
// averaged over R,G,B) and binary PGM (P5). Writing produces 8-bit PNG/PGM.
GrayImage8 read_gray_image(const std::filesystem::path& path);
GrayImage8 decode_gray_image(const std::vector<std::uint8_t>& bytes);
void write_png(const std::filesystem::path& path, const GrayImage8& img);
void write_png(const std::filesystem::path& path, const RgbImage& img,
               const std::map<std::string, std::string>& text = {});
RgbImage read_png_rgb(const std::filesystem::path& path);
/// tEXt key/value chunks of a PNG file.
std::map<std::string, std::string> read_png_text(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage8& img);

}  // namespace ltbn
