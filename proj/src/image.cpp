#include "cmos/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cmos/errors.hpp"
#include "cmos/util.hpp"

namespace cmos {

GrayImage GrayImage::filled(int w, int h, std::uint8_t value) {
  GrayImage img;
  img.width = w;
  img.height = h;
  img.pixels.assign(static_cast<std::size_t>(w) * h, value);
  return img;
}

namespace {

// Reads the next whitespace/comment-delimited token of a PNM header.
std::string next_pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_pnm_int(std::istream& in, const std::filesystem::path& path,
                  int min_allowed = 1) {
  std::string tok = next_pnm_token(in);
  try {
    std::size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v < min_allowed) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(Err::ImageDecodeError, "bad PGM header field in " + path.string());
  }
}

}  // namespace

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::ImageDecodeError, "cannot open image: " + path.string());
  std::string magic = next_pnm_token(in);
  if (magic != "P5" && magic != "P2")
    throw Error(Err::ImageDecodeError, "not a PGM file: " + path.string());
  GrayImage img;
  img.width = parse_pnm_int(in, path);
  img.height = parse_pnm_int(in, path);
  int maxval = parse_pnm_int(in, path);
  if (maxval <= 0 || maxval > 255)
    throw Error(Err::ImageDecodeError, "unsupported PGM maxval in " + path.string());
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.pixels.resize(n);
  if (magic == "P5") {
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw Error(Err::ImageDecodeError, "truncated PGM data in " + path.string());
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      int v = parse_pnm_int(in, path, 0);
      img.pixels[i] = static_cast<std::uint8_t>(std::min(v, 255));
    }
  }
  return img;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  if (img.width <= 0 || img.height <= 0)
    throw Error(Err::IoError, "refusing to write empty image " + path.string());
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Err::IoError, "cannot write image: " + path.string());
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw Error(Err::IoError, "short image write: " + path.string());
}

namespace {

// Keys cubic convolution kernel with a = -0.5.
double cubic_weight(double t) {
  t = std::abs(t);
  if (t < 1.0) return 1.0 + t * t * (1.5 * t - 2.5);
  if (t < 2.0) return 2.0 - t * (4.0 - t * (2.5 - 0.5 * t));
  return 0.0;
}

std::uint8_t quantize(double v) {
  double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

}  // namespace

GrayImage resize_bicubic(const GrayImage& src, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0)
    throw Error(Err::ImageDecodeError, "bad resize target");
  if (out_w == src.width && out_h == src.height) return src;

  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  auto clampx = [&](int x) { return std::clamp(x, 0, src.width - 1); };
  auto clampy = [&](int y) { return std::clamp(y, 0, src.height - 1); };

  // horizontal pass into a double buffer, then vertical
  std::vector<double> tmp(static_cast<std::size_t>(out_w) * src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double acc = 0.0, wsum = 0.0;
      for (int k = -1; k <= 2; ++k) {
        double w = cubic_weight(fx - (x0 + k));
        acc += w * src.at(clampx(x0 + k), y);
        wsum += w;
      }
      tmp[static_cast<std::size_t>(y) * out_w + x] = acc / wsum;
    }
  }
  GrayImage out;
  out.width = out_w;
  out.height = out_h;
  out.pixels.resize(static_cast<std::size_t>(out_w) * out_h);
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (int k = -1; k <= 2; ++k) {
        double w = cubic_weight(fy - (y0 + k));
        acc += w * tmp[static_cast<std::size_t>(clampy(y0 + k)) * out_w + x];
        wsum += w;
      }
      out.pixels[static_cast<std::size_t>(y) * out_w + x] = quantize(acc / wsum);
    }
  }
  return out;
}

std::vector<double> downsample_grid(const GrayImage& src, int grid) {
  std::vector<double> cells(static_cast<std::size_t>(grid) * grid, 0.0);
  std::vector<double> counts(cells.size(), 0.0);
  for (int y = 0; y < src.height; ++y) {
    int gy = std::min(grid - 1, y * grid / src.height);
    for (int x = 0; x < src.width; ++x) {
      int gx = std::min(grid - 1, x * grid / src.width);
      cells[static_cast<std::size_t>(gy) * grid + gx] += src.at(x, y);
      counts[static_cast<std::size_t>(gy) * grid + gx] += 1.0;
    }
  }
  for (std::size_t i = 0; i < cells.size(); ++i)
    cells[i] = counts[i] > 0 ? cells[i] / counts[i] : 0.0;
  return cells;
}

GrayImage procedural_image(std::uint64_t seed, int w, int h, int lattice) {
  GrayImage out;
  out.width = w;
  out.height = h;
  out.pixels.resize(static_cast<std::size_t>(w) * h);

  auto lattice_value = [&](int gx, int gy) {
    std::uint64_t s = seed ^ (static_cast<std::uint64_t>(gx) * 0x9e3779b97f4a7c15ull) ^
                      (static_cast<std::uint64_t>(gy) * 0xc2b2ae3d27d4eb4full);
    return static_cast<double>(splitmix64(s) & 0xff);
  };

  for (int y = 0; y < h; ++y) {
    double gy = static_cast<double>(y) * lattice / h;
    int y0 = static_cast<int>(gy);
    double ty = gy - y0;
    for (int x = 0; x < w; ++x) {
      double gx = static_cast<double>(x) * lattice / w;
      int x0 = static_cast<int>(gx);
      double tx = gx - x0;
      double v00 = lattice_value(x0, y0);
      double v10 = lattice_value(x0 + 1, y0);
      double v01 = lattice_value(x0, y0 + 1);
      double v11 = lattice_value(x0 + 1, y0 + 1);
      double v = (1 - ty) * ((1 - tx) * v00 + tx * v10) +
                 ty * ((1 - tx) * v01 + tx * v11);
      out.pixels[static_cast<std::size_t>(y) * w + x] = quantize(v);
    }
  }
  return out;
}

GrayImage blend(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error(Err::DimensionMismatch, "blend of mismatched images");
  GrayImage out = a;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(
        (static_cast<int>(a.pixels[i]) + b.pixels[i] + 1) / 2);
  }
  return out;
}

}  // namespace cmos
