#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "cmos/errors.hpp"
#include "cmos/image.hpp"

using namespace cmos;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / "cmos_image_test";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("pgm round trip") {
  GrayImage img = procedural_image(123, 33, 17);
  fs::path file = temp_dir() / "roundtrip.pgm";
  save_pgm(img, file);
  GrayImage back = load_pgm(file);
  CHECK(back.width == img.width);
  CHECK(back.height == img.height);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("ascii pgm loads") {
  fs::path file = temp_dir() / "ascii.pgm";
  FILE* f = fopen(file.string().c_str(), "w");
  fputs("P2\n# comment\n3 2\n255\n0 10 20\n30 40 255\n", f);
  fclose(f);
  GrayImage img = load_pgm(file);
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.at(0, 0) == 0);
  CHECK(img.at(2, 1) == 255);
}

TEST_CASE("decode errors") {
  CHECK_THROWS_AS(load_pgm(temp_dir() / "missing.pgm"), Error);
  fs::path bad = temp_dir() / "bad.pgm";
  FILE* f = fopen(bad.string().c_str(), "w");
  fputs("P6 nonsense", f);
  fclose(f);
  try {
    load_pgm(bad);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::ImageDecodeError);
  }
  fs::path truncated = temp_dir() / "trunc.pgm";
  f = fopen(truncated.string().c_str(), "w");
  fputs("P5\n4 4\n255\nab", f);
  fclose(f);
  CHECK_THROWS_AS(load_pgm(truncated), Error);
}

TEST_CASE("bicubic resize identity and constants") {
  GrayImage img = procedural_image(9, 24, 18);
  GrayImage same = resize_bicubic(img, 24, 18);
  CHECK(same.pixels == img.pixels);

  GrayImage flat = GrayImage::filled(40, 40, 77);
  GrayImage small = resize_bicubic(flat, 13, 9);
  for (std::uint8_t p : small.pixels) CHECK(p == 77);
}

TEST_CASE("procedural images are deterministic and seed-sensitive") {
  GrayImage a1 = procedural_image(42, 32, 32);
  GrayImage a2 = procedural_image(42, 32, 32);
  GrayImage b = procedural_image(43, 32, 32);
  CHECK(a1.pixels == a2.pixels);
  CHECK(a1.pixels != b.pixels);
}

TEST_CASE("downsample grid averages boxes") {
  GrayImage img = GrayImage::filled(16, 16, 0);
  for (int y = 0; y < 16; ++y)
    for (int x = 8; x < 16; ++x) img.at(x, y) = 200;
  auto cells = downsample_grid(img, 2);
  CHECK(cells[0] == doctest::Approx(0.0));
  CHECK(cells[1] == doctest::Approx(200.0));
  CHECK(cells[2] == doctest::Approx(0.0));
  CHECK(cells[3] == doctest::Approx(200.0));
}

TEST_CASE("blend averages pixel values") {
  GrayImage black = GrayImage::filled(4, 4, 0);
  GrayImage white = GrayImage::filled(4, 4, 255);
  GrayImage mix = blend(black, white);
  for (std::uint8_t p : mix.pixels) CHECK(static_cast<int>(p) == 128);
  CHECK_THROWS_AS(blend(black, GrayImage::filled(3, 3, 0)), Error);
}
