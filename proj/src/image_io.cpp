#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "lighttbnet/image.hpp"

namespace ltbn {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct MemReader {
  const std::vector<std::uint8_t>* bytes;
  std::size_t pos;
};

// libpng reports errors through longjmp; the message is stashed in the
// error pointer and rethrown as ImageError from the setjmp site.
void png_error_fn(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}
void png_warning_fn(png_structp, png_const_charp) {}

void png_read_mem(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->bytes->size()) png_error(png, "truncated data");  // does not return
  std::memcpy(out, r->bytes->data() + r->pos, n);
  r->pos += n;
}

struct PngReadHandle {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::string error;
  PngReadHandle() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn, png_warning_fn);
    if (!png) throw ImageError("png: out of memory");
    info = png_create_info_struct(png);
  }
  ~PngReadHandle() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriteHandle {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::string error;
  PngWriteHandle() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn, png_warning_fn);
    if (!png) throw ImageError("png: out of memory");
    info = png_create_info_struct(png);
  }
  ~PngWriteHandle() { png_destroy_write_struct(&png, &info); }
};

// Decodes to 8-bit gray or RGB samples. Returns the channel count.
int decode_png(const std::vector<std::uint8_t>& bytes, int& w, int& h, std::vector<std::uint8_t>& out,
               std::map<std::string, std::string>* text) {
  PngReadHandle hd;
  MemReader reader{&bytes, 0};
  if (setjmp(png_jmpbuf(hd.png))) throw ImageError("png: " + hd.error);
  png_set_read_fn(hd.png, &reader, png_read_mem);
  png_read_info(hd.png, hd.info);
  const auto color = png_get_color_type(hd.png, hd.info);
  const auto depth = png_get_bit_depth(hd.png, hd.info);
  if (depth == 16) png_set_strip_16(hd.png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(hd.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(hd.png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(hd.png);
  if (png_get_valid(hd.png, hd.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(hd.png), png_set_strip_alpha(hd.png);
  png_set_interlace_handling(hd.png);
  png_read_update_info(hd.png, hd.info);
  w = static_cast<int>(png_get_image_width(hd.png, hd.info));
  h = static_cast<int>(png_get_image_height(hd.png, hd.info));
  const int channels = png_get_channels(hd.png, hd.info);
  const std::size_t stride = png_get_rowbytes(hd.png, hd.info);
  out.assign(stride * static_cast<std::size_t>(h), 0);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = out.data() + stride * static_cast<std::size_t>(y);
  png_read_image(hd.png, rows.data());
  png_read_end(hd.png, hd.info);
  if (text) {
    png_textp entries = nullptr;
    int count = 0;
    png_get_text(hd.png, hd.info, &entries, &count);
    for (int i = 0; i < count; ++i) (*text)[entries[i].key] = entries[i].text ? entries[i].text : "";
  }
  return channels;
}

GrayImage8 decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
    }
    if (!any) throw ImageError("pgm: malformed header");
    return v;
  };
  const long w = next_token(), h = next_token(), maxval = next_token();
  ++pos;  // single whitespace before raster
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw ImageError("pgm: invalid header values");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t bps = maxval > 255 ? 2 : 1;
  if (bytes.size() < pos + n * bps) throw ImageError("pgm: truncated raster");
  GrayImage8 img(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < n; ++i) {
    long v = bps == 1 ? bytes[pos + i] : (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1];
    img.pixels[i] = static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  }
  return img;
}

void write_png_impl(const std::filesystem::path& path, int w, int h, int channels, const std::uint8_t* data,
                    const std::map<std::string, std::string>& text) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw ImageError("cannot write " + path.string());
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(fp, std::fclose);
  PngWriteHandle hd;
  if (setjmp(png_jmpbuf(hd.png))) throw ImageError("png: " + hd.error);
  png_init_io(hd.png, fp);
  png_set_IHDR(hd.png, hd.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_text> chunks;
  std::vector<std::string> storage;
  storage.reserve(text.size() * 2);
  for (const auto& [k, v] : text) {
    storage.push_back(k);
    storage.push_back(v);
    png_text t{};
    t.compression = PNG_TEXT_COMPRESSION_NONE;
    t.key = storage[storage.size() - 2].data();
    t.text = storage.back().data();
    t.text_length = v.size();
    chunks.push_back(t);
  }
  if (!chunks.empty()) png_set_text(hd.png, hd.info, chunks.data(), static_cast<int>(chunks.size()));
  png_write_info(hd.png, hd.info);
  const std::size_t stride = static_cast<std::size_t>(w) * static_cast<std::size_t>(channels);
  for (int y = 0; y < h; ++y) {
    png_write_row(hd.png, const_cast<png_bytep>(data + stride * static_cast<std::size_t>(y)));
  }
  png_write_end(hd.png, nullptr);
}

bool is_png(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

}  // namespace

GrayImage8 decode_gray_image(const std::vector<std::uint8_t>& bytes) {
  if (is_png(bytes)) {
    int w = 0, h = 0;
    std::vector<std::uint8_t> raw;
    const int ch = decode_png(bytes, w, h, raw, nullptr);
    GrayImage8 img(w, h);
    const std::size_t stride = raw.size() / static_cast<std::size_t>(h);
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* row = raw.data() + stride * static_cast<std::size_t>(y);
      for (int x = 0; x < w; ++x) {
        if (ch == 1) {
          img.at(x, y) = row[x];
        } else {
          const std::uint8_t* p = row + x * ch;
          img.at(x, y) = static_cast<std::uint8_t>((p[0] + p[1] + p[2] + 1) / 3);
        }
      }
    }
    return img;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
  throw ImageError("unsupported image format (expected PNG or binary PGM)");
}

GrayImage8 read_gray_image(const std::filesystem::path& path) {
  try {
    return decode_gray_image(read_file(path));
  } catch (const ImageError& e) {
    throw ImageError(path.string() + ": " + e.what());
  }
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (!is_png(bytes)) throw ImageError(path.string() + ": not a PNG");
  int w = 0, h = 0;
  std::vector<std::uint8_t> raw;
  const int ch = decode_png(bytes, w, h, raw, nullptr);
  RgbImage img(w, h);
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
    for (int c = 0; c < 3; ++c) img.rgb[i * 3 + c] = ch == 1 ? raw[i] : raw[i * 3 + c];
  }
  return img;
}

std::map<std::string, std::string> read_png_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (!is_png(bytes)) throw ImageError(path.string() + ": not a PNG");
  int w = 0, h = 0;
  std::vector<std::uint8_t> raw;
  std::map<std::string, std::string> text;
  decode_png(bytes, w, h, raw, &text);
  return text;
}

void write_png(const std::filesystem::path& path, const GrayImage8& img) {
  write_png_impl(path, img.width, img.height, 1, img.pixels.data(), {});
}

void write_png(const std::filesystem::path& path, const RgbImage& img,
               const std::map<std::string, std::string>& text) {
  write_png_impl(path, img.width, img.height, 3, img.rgb.data(), text);
}

void write_pgm(const std::filesystem::path& path, const GrayImage8& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.size()));
}

}  // namespace ltbn
