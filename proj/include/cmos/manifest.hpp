#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmos/qr_generation.hpp"
#include "cmos/records.hpp"

namespace cmos {

// Everything produced for one convertible instance.
struct QuestionBundle {
  ContentInstance instance;
  Judgment judgment;
  Selection selection;  // full OQRM audit: candidates, scores, winner
  std::optional<Embedding> v_i;
  Embedding v_p;
  std::vector<OptionCandidate> options;
  std::string template_version;

  const QrCandidate& winner() const { return selection.winner(); }
};

nlohmann::json bundle_to_json(const QuestionBundle& bundle);
QuestionBundle bundle_from_json(const nlohmann::json& j);

struct ManifestFile {
  std::string path;  // relative to the bundle directory
  std::string sha256;
  std::string role;  // "metadata" | "image"
};

struct ItemError {
  std::string id;
  std::string stage;
  std::string message;
};

struct Manifest {
  std::vector<ManifestFile> files;
  std::string config_fingerprint;
  long long seed = 0;
  std::size_t inputs = 0;
  std::vector<ItemError> errors;
  std::vector<std::string> skipped_non_convertible;

  nlohmann::json to_json() const;
};

// Writes one metadata JSON per bundle plus copies of every attempt image
// into `dir`, then manifest.json listing each file with its content hash.
// Re-running with identical inputs and seeds yields byte-identical output.
Manifest save_artifacts(std::span<const QuestionBundle> bundles,
                        const std::filesystem::path& dir,
                        const std::string& config_fingerprint, long long seed,
                        std::vector<ItemError> errors = {},
                        std::vector<std::string> skipped = {},
                        std::size_t inputs = 0);

std::vector<QuestionBundle> load_bundles(const std::filesystem::path& dir);

}  // namespace cmos
