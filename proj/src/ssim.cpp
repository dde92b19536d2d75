#include "cmos/ssim.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "cmos/errors.hpp"
#include "cmos/kernels.hpp"

namespace cmos {

namespace {

constexpr int kRadius = 5;  // 11x11 window
constexpr int kWindow = 2 * kRadius + 1;
constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    double x = i - kRadius;
    taps[i] = std::exp(-(x * x) / (2.0 * 1.5 * 1.5));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Separable valid-mode Gaussian filter: rows then columns, through the
// runtime-dispatched correlation kernel.
std::vector<double> gauss_valid(const std::vector<double>& img, int w, int h,
                                int& out_w, int& out_h) {
  static const std::array<double, kWindow> taps = gaussian_taps();
  out_w = w - 2 * kRadius;
  out_h = h - 2 * kRadius;
  std::vector<double> rows(static_cast<std::size_t>(out_w) * h);
  for (int y = 0; y < h; ++y) {
    kern::correlate_valid(img.data() + static_cast<std::size_t>(y) * w,
                          static_cast<std::size_t>(w), taps.data(), kWindow,
                          rows.data() + static_cast<std::size_t>(y) * out_w);
  }
  // column pass over the transposed access pattern
  std::vector<double> col(static_cast<std::size_t>(h));
  std::vector<double> col_out(static_cast<std::size_t>(out_h));
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
  for (int x = 0; x < out_w; ++x) {
    for (int y = 0; y < h; ++y)
      col[static_cast<std::size_t>(y)] = rows[static_cast<std::size_t>(y) * out_w + x];
    kern::correlate_valid(col.data(), static_cast<std::size_t>(h), taps.data(),
                          kWindow, col_out.data());
    for (int y = 0; y < out_h; ++y)
      out[static_cast<std::size_t>(y) * out_w + x] = col_out[static_cast<std::size_t>(y)];
  }
  return out;
}

std::vector<double> to_double(const GrayImage& img) {
  std::vector<double> out(img.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<double>(img.pixels[i]);
  return out;
}

}  // namespace

double ssim(const GrayImage& a_in, const GrayImage& b_in, bool allow_resize) {
  GrayImage a = a_in;
  GrayImage b = b_in;
  if (a.width != b.width || a.height != b.height) {
    if (!allow_resize)
      throw Error(Err::DimensionMismatch,
                  "ssim over images of different size with resize disabled");
    int w = std::min(a.width, b.width);
    int h = std::min(a.height, b.height);
    a = resize_bicubic(a, w, h);
    b = resize_bicubic(b, w, h);
  }
  if (a.width < kWindow || a.height < kWindow)
    throw Error(Err::DimensionMismatch,
                "ssim needs at least 11x11 pixels after resize");

  const int w = a.width;
  const int h = a.height;
  std::vector<double> x = to_double(a);
  std::vector<double> y = to_double(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  kern::mul(x.data(), x.data(), xx.data(), x.size());
  kern::mul(y.data(), y.data(), yy.data(), y.size());
  kern::mul(x.data(), y.data(), xy.data(), x.size());

  int ow = 0, oh = 0;
  std::vector<double> mu_x = gauss_valid(x, w, h, ow, oh);
  std::vector<double> mu_y = gauss_valid(y, w, h, ow, oh);
  std::vector<double> e_xx = gauss_valid(xx, w, h, ow, oh);
  std::vector<double> e_yy = gauss_valid(yy, w, h, ow, oh);
  std::vector<double> e_xy = gauss_valid(xy, w, h, ow, oh);

  double total = 0.0;
  const std::size_t n = mu_x.size();
  for (std::size_t i = 0; i < n; ++i) {
    double mx = mu_x[i];
    double my = mu_y[i];
    double var_x = e_xx[i] - mx * mx;
    double var_y = e_yy[i] - my * my;
    double cov = e_xy[i] - mx * my;
    double num = (2.0 * mx * my + kC1) * (2.0 * cov + kC2);
    double den = (mx * mx + my * my + kC1) * (var_x + var_y + kC2);
    total += num / den;
  }
  return total / static_cast<double>(n);
}

double ssim_files(const std::filesystem::path& a, const std::filesystem::path& b,
                  bool allow_resize) {
  return ssim(load_pgm(a), load_pgm(b), allow_resize);
}

double clip_t(const std::string& image_ref, const std::string& text,
              ImageEncoder& image_enc, TextEncoder& text_enc) {
  return cosine(image_enc.embed_image(image_ref), text_enc.embed_text(text));
}

}  // namespace cmos
