#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "lighttbnet/augment.hpp"
#include "lighttbnet/clahe.hpp"
#include "lighttbnet/image.hpp"
#include "lighttbnet/preprocess.hpp"
#include "oracles.hpp"

using namespace ltbn;
namespace fs = std::filesystem;

namespace {

GrayImage8 random_image(int w, int h, std::mt19937_64& rng) {
  GrayImage8 img(w, h);
  // mixture of a smooth gradient and noise so histograms are uneven
  std::uniform_int_distribution<int> noise(-40, 40);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint8_t>(std::clamp(x * 200 / w + noise(rng), 0, 255));
  return img;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("ltbn_imaging_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("CLAHE keeps constant images fixed") {
  for (int v : {0, 17, 128, 255}) {
    GrayImage8 img(40, 30, static_cast<std::uint8_t>(v));
    CHECK(clahe(img, ClaheConfig{}) == img);
  }
}

TEST_CASE("single-tile CLAHE without clipping is histogram equalization") {
  std::mt19937_64 rng(1);
  ClaheConfig cfg;
  cfg.tiles_x = cfg.tiles_y = 1;
  cfg.clip_limit = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 5; ++i) {
    auto img = random_image(37 + i, 23 + 2 * i, rng);
    CHECK(clahe(img, cfg) == oracle::histogram_equalize(img));
  }
}

TEST_CASE("clipped histograms respect the bound") {
  std::mt19937_64 rng(2);
  for (double clip : {1.0, 2.0, 4.0}) {
    ClaheTrace trace;
    ClaheConfig cfg;
    cfg.clip_limit = clip;
    auto out = clahe(random_image(96, 80, rng), cfg, &trace);
    CHECK(trace.clipped.size() == 64);
    for (const auto& h : trace.clipped) {
      std::uint64_t total = 0;
      for (auto b : h) {
        CHECK(b <= trace.clip_count + 1);
        total += b;
      }
      CHECK(total == trace.tile_pixels);
    }
  }
}

TEST_CASE("clip count and redistribution") {
  CHECK(clahe_clip_count(2.0, 1024, 256) == 8);
  CHECK(clahe_clip_count(0.01, 1024, 256) == 1);
  CHECK(clahe_clip_count(std::numeric_limits<double>::infinity(), 1024, 256) == 1024);
  std::vector<std::uint32_t> h{10, 0, 0, 0};
  clip_histogram(h, 4);
  CHECK(h == std::vector<std::uint32_t>{4, 2, 2, 2});
  std::vector<std::uint32_t> full{5, 5, 5, 5};
  clip_histogram(full, 4);
  std::uint32_t sum = 0;
  for (auto b : full) {
    CHECK(b <= 5);
    sum += b;
  }
  CHECK(sum == 20);
}

TEST_CASE("CLAHE config validation") {
  ClaheConfig c;
  c.tiles_x = 0;
  CHECK_THROWS(c.validate());
  c = ClaheConfig{};
  c.clip_limit = -1;
  CHECK_THROWS(c.validate());
}

TEST_CASE("resize of a constant image is constant") {
  GrayImageF img(7, 5, 0.25f);
  auto r = resize_bilinear(img, 16, 11);
  CHECK(r.width == 16);
  for (float v : r.pixels) CHECK(v == doctest::Approx(0.25f));
}

TEST_CASE("resize 2x1 to 4x1 under half-pixel centres") {
  GrayImage8 img(2, 1);
  img.pixels = {0, 255};
  auto r = resize_bilinear(img, 4, 1);
  // centres map to -0.25 (clamped), 0.25, 0.75, 1.25 (clamped)
  CHECK(r.pixels == std::vector<std::uint8_t>{0, 64, 191, 255});
  GrayImageF f(2, 1);
  f.pixels = {0.0f, 1.0f};
  auto rf = resize_bilinear(f, 4, 1);
  CHECK(rf.pixels[1] == doctest::Approx(0.25f));
  CHECK(rf.pixels[2] == doctest::Approx(0.75f));
}

TEST_CASE("resize to the same size is the identity") {
  std::mt19937_64 rng(3);
  auto img = random_image(19, 13, rng);
  CHECK(resize_bilinear(img, 19, 13) == img);
}

TEST_CASE("resize rejects degenerate input") {
  CHECK_THROWS(resize_bilinear(GrayImageF{}, 4, 4));
  CHECK_THROWS(resize_bilinear(GrayImageF(1, 1), 4, 4));
  CHECK_THROWS(resize_bilinear(GrayImageF(4, 4), 0, 4));
}

TEST_CASE("zero augmentation draw is the identity") {
  std::mt19937_64 rng(4);
  auto img = to_float(random_image(24, 20, rng));
  auto out = apply_affine(img, AffineDraw{});
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(out.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-6));
}

TEST_CASE("flip applied twice restores the image") {
  std::mt19937_64 rng(5);
  auto img = to_float(random_image(24, 20, rng));
  AffineDraw d;
  d.flip = true;
  auto twice = apply_affine(apply_affine(img, d), d);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(twice.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-6));
}

TEST_CASE("rotating an impulse by 15 degrees lands on the rotated coordinate") {
  const int n = 41;
  GrayImageF img(n, n, 0.0f);
  const int px = 30, py = 12;
  img.at(px, py) = 1.0f;
  AffineDraw d;
  d.angle_deg = 15.0;
  auto out = apply_affine(img, d);
  // rotate about the centre, x right / y down, clockwise on screen
  const double c = (n - 1) / 2.0, th = 15.0 * std::acos(-1.0) / 180.0;
  const double ex = c + (px - c) * std::cos(th) - (py - c) * std::sin(th);
  const double ey = c + (px - c) * std::sin(th) + (py - c) * std::cos(th);
  auto fwd = affine_forward(d, n, n, px, py);
  CHECK(fwd[0] == doctest::Approx(ex));
  CHECK(fwd[1] == doctest::Approx(ey));
  int bx = 0, by = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (out.at(x, y) > out.at(bx, by)) bx = x, by = y;
  CHECK(std::fabs(bx - ex) <= 1.0);
  CHECK(std::fabs(by - ey) <= 1.0);
}

TEST_CASE("augmentation draws stay in range and replay from the seed") {
  AugmentConfig cfg;
  std::mt19937_64 a(7), b(7);
  for (int i = 0; i < 200; ++i) {
    auto d = draw_affine(cfg, a);
    auto e = draw_affine(cfg, b);
    CHECK(d.angle_deg == e.angle_deg);
    CHECK(std::fabs(d.angle_deg) <= 15.0);
    CHECK(std::fabs(d.shift_x) <= 0.10);
    CHECK(std::fabs(d.shift_y) <= 0.10);
    CHECK(std::fabs(d.scale) <= 0.10);
  }
  CHECK(stream_seed(1, 2, 3) == stream_seed(1, 2, 3));
  CHECK(stream_seed(1, 2, 3) != stream_seed(1, 3, 3));
}

TEST_CASE("normalize: constant maps to zeros") {
  auto v = normalize(GrayImageF(5, 5, 0.7f));
  for (float e : v) CHECK(e == 0.0f);
}

TEST_CASE("normalize: zero mean, unit variance, affine invariant") {
  std::mt19937_64 rng(8);
  auto img = to_float(random_image(32, 32, rng));
  auto v = normalize(img);
  double m = 0, s2 = 0;
  for (float e : v) m += e;
  m /= v.size();
  for (float e : v) s2 += (e - m) * (e - m);
  CHECK(std::fabs(m) < 1e-6);
  CHECK(std::fabs(std::sqrt(s2 / v.size()) - 1) < 1e-5);
  auto aff = img;
  for (auto& p : aff.pixels) p = 2.5f * p + 0.3f;
  auto w = normalize(aff);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(w[i] == doctest::Approx(v[i]).epsilon(1e-4));
}

TEST_CASE("u8/float conversion rounds and saturates") {
  GrayImageF f(4, 1);
  f.pixels = {-0.5f, 0.5f, 1.0f, 2.0f};
  CHECK(to_u8(f).pixels == std::vector<std::uint8_t>{0, 128, 255, 255});
}

TEST_CASE("preprocess yields a square float image in range") {
  std::mt19937_64 rng(9);
  PreprocessConfig cfg;
  cfg.size = 64;
  auto out = preprocess(random_image(90, 120, rng), cfg);
  CHECK(out.width == 64);
  CHECK(out.height == 64);
  for (float v : out.pixels) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("PNG and PGM round-trip") {
  std::mt19937_64 rng(10);
  auto img = random_image(33, 17, rng);
  auto dir = temp_dir("io");
  write_png(dir / "a.png", img);
  CHECK(read_gray_image(dir / "a.png") == img);
  write_pgm(dir / "a.pgm", img);
  CHECK(read_gray_image(dir / "a.pgm") == img);

  RgbImage rgb(3, 2);
  rgb.px(1, 1)[0] = 30;
  rgb.px(1, 1)[1] = 60;
  rgb.px(1, 1)[2] = 90;
  write_png(dir / "c.png", rgb, {{"score", "0.5000"}});
  CHECK(read_gray_image(dir / "c.png").at(1, 1) == 60);
  CHECK(read_png_text(dir / "c.png").at("score") == "0.5000");
  CHECK(read_png_rgb(dir / "c.png").px(1, 1)[2] == 90);
  fs::remove_all(dir);
}

TEST_CASE("unreadable images raise ImageError") {
  auto dir = temp_dir("bad");
  std::ofstream(dir / "x.png") << "not an image";
  CHECK_THROWS_AS(read_gray_image(dir / "x.png"), ImageError);
  CHECK_THROWS_AS(read_gray_image(dir / "missing.png"), ImageError);
  fs::remove_all(dir);
}
