#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmos/manifest.hpp"
#include "cmos/option_synthesis.hpp"
#include "cmos/prompt.hpp"

namespace cmos {

struct SweepRow {
  double value = 0.0;
  std::map<std::string, double> metrics;
};

struct SweepReport {
  std::string param;           // "alpha" | "beta"
  std::string primary_metric;  // metric the argmax is taken over
  std::vector<SweepRow> rows;  // grid order (ascending)
  std::size_t argmax_index = 0;

  double argmax_value() const { return rows[argmax_index].value; }
  nlohmann::json to_json() const;
  std::string to_table() const;
};

// One instance's recorded stage-(b) output: enough to re-run OQRM selection
// at any alpha without touching a backend.
struct AlphaAuditRecord {
  std::string id;
  std::vector<QrCandidate> candidates;
  std::optional<Embedding> v_i;
  Embedding v_p;
};

// Accepts either a bundle directory (reads each q_*.json audit) or a JSONL
// file of audit records.
std::vector<AlphaAuditRecord> load_alpha_audits(const std::filesystem::path& path);

// Re-selects per grid point and scores the winning question against the
// reference; metrics are mean BLEU-4 / ROUGE-L over covered instances.
SweepReport sweep_alpha(std::span<const AlphaAuditRecord> records,
                        const std::map<std::string, std::string>& question_refs,
                        std::span<const double> grid);

struct BetaSweepOption {
  std::string instance_id;
  std::string label;
  std::string description;
};

std::vector<BetaSweepOption> load_beta_options(const std::filesystem::path& path);

// Per grid point: template re-retrieval + synthesis per option, then mean
// CLIP-T of the final image against its own description.
SweepReport sweep_beta(const ImageBank& bank,
                       std::span<const BetaSweepOption> options,
                       const TuneConfig& base_cfg, ChatModel& chat,
                       ImageGenerator& t2i, TextEncoder& text_enc,
                       ImageEncoder& image_enc, const TemplateSet& templates,
                       std::optional<long long> seed,
                       std::span<const double> grid);

std::vector<double> make_grid(double lo, double hi, double step);

}  // namespace cmos
