#include "cmos/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "cmos/errors.hpp"
#include "cmos/kernels.hpp"

namespace cmos {

bool Embedding::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

double norm2(const Embedding& a) {
  return std::sqrt(kern::sumsq(a.values.data(), a.dim()));
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim())
    throw Error(Err::DimensionMismatch,
                "cosine over dims " + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.dim()));
  if (a.space_id() != b.space_id())
    throw Error(Err::SpaceMismatch, "cosine across spaces '" +
                                        std::string(a.space_id()) + "' vs '" +
                                        std::string(b.space_id()) + "'");
  const double na = kern::sumsq(a.values.data(), a.dim());
  const double nb = kern::sumsq(b.values.data(), b.dim());
  if (na == 0.0 || nb == 0.0)
    throw Error(Err::ZeroNormVector, "cosine of a zero-norm vector");
  const double d = kern::dot(a.values.data(), b.values.data(), a.dim());
  return std::clamp(d / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Centroid centroid(std::span<const Embedding> vs) {
  if (vs.empty()) throw Error(Err::EmptyInput, "centroid of no vectors");
  const std::size_t dim = vs.front().dim();
  const std::string& enc = vs.front().encoder_id;
  Centroid out;
  out.mean.values.assign(dim, 0.0);
  out.mean.encoder_id = enc;
  for (const Embedding& v : vs) {
    if (v.dim() != dim)
      throw Error(Err::DimensionMismatch, "centroid over mixed dims");
    if (v.encoder_id != enc)
      throw Error(Err::SpaceMismatch, "centroid over mixed encoders '" + enc +
                                          "' vs '" + v.encoder_id + "'");
    kern::add_inplace(out.mean.values.data(), v.values.data(), dim);
  }
  kern::scale_inplace(out.mean.values.data(), 1.0 / static_cast<double>(vs.size()), dim);
  out.count = vs.size();
  return out;
}

}  // namespace cmos
