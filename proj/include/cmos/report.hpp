#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmos/records.hpp"

namespace cmos {

struct ItemScores {
  std::string id;
  Subject subject = Subject::Custom;
  Modality modality = Modality::TXT;
  GradeBand grade = GradeBand::G1_6;
  std::map<std::string, double> values;
};

// Per-item metric rows plus slice means (overall, per subject, per modality,
// per grade). A slice mean is the arithmetic mean over member items carrying
// that metric.
struct ScoreReport {
  struct Aggregate {
    std::string slice;  // "ALL", "subject:NAT", "modality:IMG", "grade:G1-6"
    std::size_t count = 0;
    std::map<std::string, double> mean;
  };

  std::vector<ItemScores> per_item;
  std::vector<Aggregate> aggregates;

  nlohmann::json to_json() const;
  std::string to_table() const;  // aligned plain-text rows
};

ScoreReport build_report(std::vector<ItemScores> items);

}  // namespace cmos
