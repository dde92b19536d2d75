#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cmos {

// A dense encoder output. `encoder_id` has the form "<name>@<space>"; vectors
// are comparable across encoders exactly when they share the space suffix
// (CLIP-family text/image encoders live in one space under different names).
struct Embedding {
  std::vector<double> values;
  std::string encoder_id;

  std::size_t dim() const { return values.size(); }

  std::string_view space_id() const {
    std::string_view id = encoder_id;
    auto at = id.find('@');
    return at == std::string_view::npos ? id : id.substr(at + 1);
  }

  bool all_finite() const;
};

struct Centroid {
  Embedding mean;
  std::size_t count = 0;
};

// Cosine similarity, clamped to [-1, 1] after the division. Requires equal
// dims and a shared embedding space; rejects zero-norm inputs rather than
// inventing a similarity.
double cosine(const Embedding& a, const Embedding& b);

double norm2(const Embedding& a);

// Componentwise arithmetic mean. All inputs must share dim and encoder_id.
Centroid centroid(std::span<const Embedding> vs);

}  // namespace cmos
