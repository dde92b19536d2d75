#pragma once

#include <filesystem>
#include <string>

#include "cmos/backends.hpp"
#include "cmos/image.hpp"

namespace cmos {

// Mean local SSIM over 8-bit grayscale: 11x11 Gaussian window (sigma 1.5),
// C1=(0.01*255)^2, C2=(0.03*255)^2, valid window positions only. Mismatched
// sizes are resized bicubically to the smaller image unless allow_resize is
// off, in which case the mismatch is an error.
double ssim(const GrayImage& a, const GrayImage& b, bool allow_resize = true);

double ssim_files(const std::filesystem::path& a, const std::filesystem::path& b,
                  bool allow_resize = true);

// cosine(phi(image), psi(text)) in the encoders' shared space.
double clip_t(const std::string& image_ref, const std::string& text,
              ImageEncoder& image_enc, TextEncoder& text_enc);

}  // namespace cmos
