#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmos/backends.hpp"
#include "cmos/exemplar_store.hpp"
#include "cmos/prompt.hpp"
#include "cmos/records.hpp"

namespace cmos {

struct OqrmConfig {
  double alpha = 0.6;
  int m = 3;  // candidate count
  std::string photo_phrase_template = "a photo of {answer}";

  void validate() const;  // hard bounds; logs nothing, warning band is advisory
  bool alpha_in_sweep_band() const { return alpha >= 0.1 && alpha <= 1.2; }
};

std::string photo_phrase(const OqrmConfig& cfg, const std::string& answer);

// Parses "Question: ... Reason: ..." replies.
std::pair<std::string, std::string> parse_question_reason(const std::string& raw);

struct QgenOutcome {
  std::vector<QrCandidate> candidates;
  std::vector<std::string> dropped_raw;  // unparseable replies, recorded
  std::size_t collapsed = 0;             // exact-string duplicate replies
  std::string template_version;
};

// Issues m independent chat calls, each prompt carrying the top-3 exemplars
// by retrieval score (distinct indices); parses and embeds each reply.
// Candidates that fail to parse are dropped; all-m-failed is an error.
QgenOutcome generate_candidates(const ContentInstance& s, const Judgment& judgment,
                                const ExemplarStore& store,
                                const QueryEmbeddings& query, ChatModel& chat,
                                TextEncoder& text_enc, const TemplateSet& templates,
                                int m);

// cosine(q, C_Q) + cosine(r, C_R); range [-2, 2].
double internal_consistency(const QrCandidate& c, const Centroid& cq,
                            const Centroid& cr);

// cosine(v_i, r) + cosine(q, v_p); the image term is omitted (not zeroed)
// when the instance has no image.
double external_consistency(const QrCandidate& c,
                            const std::optional<Embedding>& v_i,
                            const Embedding& v_p);

struct Selection {
  std::size_t winner_index = 0;
  double alpha = 0.6;
  std::vector<QrCandidate> scored;  // full table kept for audit

  const QrCandidate& winner() const { return scored[winner_index]; }
};

// Fills c_int / c_ext / tms on every candidate (centroids over the full set,
// the candidate included) and returns the argmax of tms; ties break to the
// lowest candidate index.
Selection select_optimal(std::vector<QrCandidate> candidates,
                         const OqrmConfig& cfg,
                         const std::optional<Embedding>& v_i,
                         const Embedding& v_p);

}  // namespace cmos
