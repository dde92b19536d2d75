#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmos/records.hpp"

namespace cmos {

enum class LoadMode { Strict, Lenient };

struct LoadIssue {
  std::size_t line = 0;
  std::string field;
  std::string message;
};

struct LoadReport {
  std::vector<LoadIssue> issues;
  std::size_t skipped = 0;
};

// One JSON object per line, UTF-8. Instance fields: id, context, image,
// answer, subject, grade, split. Exemplar records add convertible / reason
// (and optionally the source question).
nlohmann::json instance_to_json(const ContentInstance& s);
nlohmann::json exemplar_to_json(const Exemplar& e);
ContentInstance instance_from_json(const nlohmann::json& j);
Exemplar exemplar_from_json(const nlohmann::json& j);

// Strict mode throws Error(SchemaViolation/DuplicateId) naming the line and
// field; lenient mode skips bad records and reports them.
DatasetSplit load_dataset(const std::filesystem::path& path, SplitKind kind,
                          LoadMode mode = LoadMode::Strict,
                          LoadReport* report = nullptr);

void save_dataset(const DatasetSplit& split, const std::filesystem::path& path);

}  // namespace cmos
