#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cmos/backends.hpp"
#include "cmos/records.hpp"

namespace cmos {

struct StoreEntry {
  Exemplar exemplar;
  Embedding v_text;
  Embedding v_answer;
  std::optional<Embedding> v_image;  // present iff the exemplar has an image
};

struct ExemplarStore {
  std::vector<StoreEntry> entries;
  std::string text_encoder_id;
  std::string image_encoder_id;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

// Prefixes a relative image reference with the directory its record came
// from; absolute references pass through.
std::string resolve_image_ref(const std::filesystem::path& base,
                              const std::string& ref);

ContentInstance with_resolved_image(const ContentInstance& s,
                                    const std::filesystem::path& base);

// Embeds every exemplar's text, answer, and image-if-present. Failures are
// reported as EncoderFailure naming the offending entry id.
ExemplarStore build_store(std::span<const Exemplar> exemplars,
                          TextEncoder& text_enc, ImageEncoder& image_enc);

void save_store(const ExemplarStore& store, const std::filesystem::path& dir);
ExemplarStore load_store(const std::filesystem::path& dir);

struct QueryEmbeddings {
  Embedding v_text;
  Embedding v_answer;
  std::optional<Embedding> v_image;
};

QueryEmbeddings embed_instance(const ContentInstance& s, TextEncoder& text_enc,
                               ImageEncoder& image_enc);

enum class RetrievalModality { Text, Answer, Image };
const char* modality_label(RetrievalModality m);

struct RetrievalHit {
  std::size_t index = 0;
  double score = 0.0;
  RetrievalModality modality = RetrievalModality::Text;
};

// Per-modality cosine similarities; the image term is skipped (not zeroed)
// when either side lacks an image. The winner maximizes the per-entry max
// over available modalities; ties break to the lowest entry index.
RetrievalHit retrieve_best(const ExemplarStore& store, const QueryEmbeddings& q);
RetrievalHit retrieve_best(const ExemplarStore& store, const ContentInstance& s,
                           TextEncoder& text_enc, ImageEncoder& image_enc);

// Scores sorted descending (index-ascending on ties); k capped at store size.
std::vector<RetrievalHit> retrieve_top_k(const ExemplarStore& store,
                                         const QueryEmbeddings& q, std::size_t k);

}  // namespace cmos
