#include "cmos/dataset.hpp"

#include <fstream>
#include <unordered_set>

#include "cmos/errors.hpp"

namespace cmos {

using nlohmann::json;

json instance_to_json(const ContentInstance& s) {
  json j;
  j["id"] = s.id;
  j["context"] = s.context;
  if (s.image_ref) j["image"] = *s.image_ref;
  j["answer"] = s.answer;
  j["subject"] = s.subject == Subject::Custom && !s.subject_raw.empty()
                     ? s.subject_raw
                     : subject_name(s.subject);
  j["grade"] = grade_name(s.grade);
  return j;
}

json exemplar_to_json(const Exemplar& e) {
  json j = instance_to_json(e.instance);
  j["convertible"] = e.convertible;
  j["reason"] = e.reason;
  if (e.question) j["question"] = *e.question;
  return j;
}

namespace {

std::string require_string(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty())
    throw Error(Err::SchemaViolation,
                std::string("missing or empty field '") + field + "'");
  return it->get<std::string>();
}

}  // namespace

ContentInstance instance_from_json(const json& j) {
  ContentInstance s;
  s.id = require_string(j, "id");
  s.context = require_string(j, "context");
  s.answer = require_string(j, "answer");
  if (auto it = j.find("image"); it != j.end() && !it->is_null()) {
    if (!it->is_string() || it->get<std::string>().empty())
      throw Error(Err::SchemaViolation, "missing or empty field 'image'");
    s.image_ref = it->get<std::string>();
  }
  std::string subj = j.value("subject", std::string("custom"));
  s.subject = parse_subject(subj);
  s.subject_raw = subj;
  s.grade = parse_grade(j.value("grade", std::string("G1-6")));
  return s;
}

Exemplar exemplar_from_json(const json& j) {
  Exemplar e;
  e.instance = instance_from_json(j);
  auto it = j.find("convertible");
  if (it == j.end() || !it->is_boolean())
    throw Error(Err::SchemaViolation, "missing or empty field 'convertible'");
  e.convertible = it->get<bool>();
  e.reason = require_string(j, "reason");
  if (auto q = j.find("question"); q != j.end() && q->is_string() && !q->get<std::string>().empty())
    e.question = q->get<std::string>();
  return e;
}

namespace {

// Pulls the offending field name back out of a SchemaViolation message so
// load issues can be itemized per field.
std::string issue_field(const std::string& message) {
  auto b = message.find('\'');
  if (b == std::string::npos) return {};
  auto e = message.find('\'', b + 1);
  if (e == std::string::npos) return {};
  return message.substr(b + 1, e - b - 1);
}

}  // namespace

DatasetSplit load_dataset(const std::filesystem::path& path, SplitKind kind,
                          LoadMode mode, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw Error(Err::FileNotFound, path.string());

  DatasetSplit split;
  split.kind = kind;
  split.name = split_name(kind);
  const std::filesystem::path base = path.parent_path();

  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](Err code, const std::string& msg) {
    std::string full = "line " + std::to_string(line_no) + ": " + msg;
    if (mode == LoadMode::Strict) throw Error(code, full + " (" + path.string() + ")");
    if (report) report->issues.push_back({line_no, issue_field(msg), full});
    if (report) ++report->skipped;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(Err::SchemaViolation, std::string("invalid JSON: ") + e.what());
      continue;
    }
    try {
      ContentInstance s;
      Exemplar e;
      if (kind == SplitKind::D_E) {
        e = exemplar_from_json(j);
        s = e.instance;
      } else {
        s = instance_from_json(j);
      }
      if (!seen_ids.insert(s.id).second)
        throw Error(Err::DuplicateId, "duplicate id '" + s.id + "'");
      if (s.image_ref) {
        std::filesystem::path img = base / *s.image_ref;
        if (mode == LoadMode::Strict && !std::filesystem::exists(img))
          throw Error(Err::SchemaViolation,
                      "field 'image' does not resolve: " + img.string());
      }
      if (kind == SplitKind::D_E)
        split.exemplars.push_back(std::move(e));
      else
        split.instances.push_back(std::move(s));
    } catch (const Error& e) {
      fail(e.code(), e.what());
    }
  }
  return split;
}

void save_dataset(const DatasetSplit& split, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Err::IoError, "cannot write dataset: " + path.string());
  if (split.holds_exemplars()) {
    for (const Exemplar& e : split.exemplars) out << exemplar_to_json(e).dump() << "\n";
  } else {
    for (const ContentInstance& s : split.instances)
      out << instance_to_json(s).dump() << "\n";
  }
}

}  // namespace cmos
