#include "cmos/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace cmos {

using nlohmann::json;

namespace {

ScoreReport::Aggregate aggregate_slice(
    const std::string& slice, const std::vector<const ItemScores*>& members) {
  ScoreReport::Aggregate agg;
  agg.slice = slice;
  agg.count = members.size();
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const ItemScores* item : members)
    for (const auto& [metric, value] : item->values) {
      auto& [sum, n] = sums[metric];
      sum += value;
      ++n;
    }
  for (const auto& [metric, sn] : sums)
    agg.mean[metric] = sn.first / static_cast<double>(sn.second);
  return agg;
}

}  // namespace

ScoreReport build_report(std::vector<ItemScores> items) {
  ScoreReport report;
  report.per_item = std::move(items);

  auto collect = [&](const std::string& slice, auto&& pred) {
    std::vector<const ItemScores*> members;
    for (const ItemScores& item : report.per_item)
      if (pred(item)) members.push_back(&item);
    if (!members.empty())
      report.aggregates.push_back(aggregate_slice(slice, members));
  };

  collect("ALL", [](const ItemScores&) { return true; });
  for (Subject s : {Subject::NAT, Subject::SOC, Subject::LAN, Subject::Custom})
    collect(std::string("subject:") + subject_name(s),
            [s](const ItemScores& i) { return i.subject == s; });
  for (Modality m : {Modality::TXT, Modality::IMG})
    collect(std::string("modality:") + (m == Modality::TXT ? "TXT" : "IMG"),
            [m](const ItemScores& i) { return i.modality == m; });
  for (GradeBand g : {GradeBand::G1_6, GradeBand::G7_12})
    collect(std::string("grade:") + grade_name(g),
            [g](const ItemScores& i) { return i.grade == g; });
  return report;
}

json ScoreReport::to_json() const {
  json j;
  j["per_item"] = json::array();
  for (const ItemScores& item : per_item) {
    json row{{"id", item.id},
             {"subject", subject_name(item.subject)},
             {"modality", item.modality == Modality::TXT ? "TXT" : "IMG"},
             {"grade", grade_name(item.grade)}};
    for (const auto& [metric, value] : item.values) row[metric] = value;
    j["per_item"].push_back(std::move(row));
  }
  j["aggregates"] = json::array();
  for (const Aggregate& agg : aggregates) {
    json row{{"slice", agg.slice}, {"count", agg.count}};
    for (const auto& [metric, value] : agg.mean) row[metric] = value;
    j["aggregates"].push_back(std::move(row));
  }
  return j;
}

std::string ScoreReport::to_table() const {
  std::set<std::string> metric_set;
  for (const Aggregate& agg : aggregates)
    for (const auto& [metric, _] : agg.mean) metric_set.insert(metric);
  std::vector<std::string> metrics(metric_set.begin(), metric_set.end());

  std::size_t slice_w = 5;
  for (const Aggregate& agg : aggregates)
    slice_w = std::max(slice_w, agg.slice.size());

  std::string out;
  char buf[64];
  out += "slice";
  out.append(slice_w - 5 + 2, ' ');
  out += "    n";
  for (const std::string& m : metrics) {
    std::snprintf(buf, sizeof(buf), "  %12s", m.c_str());
    out += buf;
  }
  out += "\n";
  for (const Aggregate& agg : aggregates) {
    out += agg.slice;
    out.append(slice_w - agg.slice.size() + 2, ' ');
    std::snprintf(buf, sizeof(buf), "%5zu", agg.count);
    out += buf;
    for (const std::string& m : metrics) {
      auto it = agg.mean.find(m);
      if (it == agg.mean.end())
        std::snprintf(buf, sizeof(buf), "  %12s", "-");
      else
        std::snprintf(buf, sizeof(buf), "  %12.4f", it->second);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace cmos
