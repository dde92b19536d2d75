#pragma once

#include <optional>

#include "cmos/config.hpp"
#include "cmos/dataset.hpp"
#include "cmos/manifest.hpp"
#include "cmos/option_synthesis.hpp"
#include "cmos/report.hpp"

namespace cmos {

struct PipelineBackends {
  TextEncoder& text_enc;
  ImageEncoder& image_enc;
  ChatModel& chat;
  ImageGenerator& t2i;
  CallLog* log = nullptr;
};

struct InstanceOutcome {
  enum class Status { Generated, SkippedNonConvertible, Failed };
  Status status = Status::Failed;
  std::string id;
  std::string stage;  // stage reached when a failure happened
  std::string error;
  std::optional<QuestionBundle> bundle;
};

struct RunResult {
  std::vector<InstanceOutcome> outcomes;
  Manifest manifest;
  std::filesystem::path manifest_path;

  std::size_t generated() const;
  std::size_t skipped() const;
  std::size_t failed() const;
};

// Stages (a)-(d) per instance: discriminate; if convertible, generate m
// candidates, OQRM-select, generate t options, retrieve templates, run the
// tune loops. Per-instance failures are recorded and never abort the batch.
// Instances fan out over a bounded worker pool; artifacts are written in
// input order.
RunResult run_pipeline(const RunConfig& cfg, const DatasetSplit& split,
                       const ExemplarStore& store, const ImageBank& bank,
                       PipelineBackends& backends);

// Scores a bundle directory against reference questions (id -> question) and
// computes image metrics where option images exist on disk.
ScoreReport evaluate_bundles(const std::vector<QuestionBundle>& bundles,
                             const std::map<std::string, std::string>& question_refs,
                             const std::filesystem::path& bundle_dir,
                             ImageEncoder* image_enc, TextEncoder* text_enc);

// References file: JSONL of {"id", "question"}.
std::map<std::string, std::string> load_question_refs(
    const std::filesystem::path& path);

}  // namespace cmos
