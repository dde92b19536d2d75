#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cmos {

// 8-bit grayscale raster. Everything image-shaped in this codebase (mock
// generator output, fixture bank, SSIM inputs) goes through this type;
// on-disk format is PGM (binary P5 written, P5/P2 read).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }

  static GrayImage filled(int w, int h, std::uint8_t value);
};

GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

// Separable bicubic resampling (Keys kernel, a = -0.5), edge-clamped.
GrayImage resize_bicubic(const GrayImage& src, int out_w, int out_h);

// Box-average downsample onto a g x g grid (mock image-encoder input).
std::vector<double> downsample_grid(const GrayImage& src, int grid);

// Deterministic value-noise image: a coarse lattice of hash-derived bytes,
// bilinearly upsampled. Pure function of (seed, size, lattice).
GrayImage procedural_image(std::uint64_t seed, int w, int h, int lattice = 8);

// 50/50 blend, used by the mock generator for template conditioning.
GrayImage blend(const GrayImage& a, const GrayImage& b);

}  // namespace cmos
