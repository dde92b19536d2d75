#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmos/embedding.hpp"

namespace cmos {

enum class Subject { NAT, SOC, LAN, Custom };
enum class GradeBand { G1_6, G7_12 };
enum class Modality { TXT, IMG };
enum class SplitKind { D_O, D_E, D_C, D_Q, Custom };

const char* subject_name(Subject s);
const char* grade_name(GradeBand g);
const char* split_name(SplitKind k);
Subject parse_subject(const std::string& s);         // unknown -> Custom
GradeBand parse_grade(const std::string& s);         // throws on unknown
SplitKind parse_split_kind(const std::string& s);    // unknown -> Custom

// One convertible-or-not input record: context text, optional image, answer.
struct ContentInstance {
  std::string id;
  std::string context;
  std::optional<std::string> image_ref;
  std::string answer;
  Subject subject = Subject::Custom;
  std::string subject_raw;  // original tag, kept for custom subjects
  GradeBand grade = GradeBand::G1_6;

  Modality modality() const {
    return image_ref.has_value() ? Modality::IMG : Modality::TXT;
  }
};

// Instance plus a convertibility judgment and the reasoning behind it.
// `question` optionally carries the source MCQ's question; the question
// generation prompt shows it when present.
struct Exemplar {
  ContentInstance instance;
  bool convertible = false;
  std::string reason;
  std::optional<std::string> question;
};

struct Judgment {
  bool convertible = false;
  std::string reason;
  std::string raw_response;
};

// A generated question-reason pair with cached embeddings and score parts.
struct QrCandidate {
  std::string question;
  std::string reason;
  Embedding q_vec;
  Embedding r_vec;
  std::optional<double> c_int;
  std::optional<double> c_ext;
  std::optional<double> tms;
  bool ext_image_term_omitted = false;  // TXT instance: Eq. has no image term
};

struct OptionAttempt {
  std::string image_ref;
  double score = 0.0;
  std::string suggestions;
};

struct TemplateRef {
  std::string id;
  std::string image_ref;
  std::string caption;
  double score = 0.0;
};

struct OptionCandidate {
  std::string label;  // "a".."f"
  std::string text;
  bool is_answer = false;
  std::string description;
  std::optional<TemplateRef> template_ref;
  std::vector<OptionAttempt> attempts;
  bool accepted = false;
  bool below_threshold = false;
  std::size_t selected_attempt = 0;
};

struct DatasetSplit {
  SplitKind kind = SplitKind::Custom;
  std::string name;
  std::vector<ContentInstance> instances;  // D_O / D_C / D_Q / custom
  std::vector<Exemplar> exemplars;         // D_E only

  bool holds_exemplars() const { return kind == SplitKind::D_E; }
  std::size_t size() const {
    return holds_exemplars() ? exemplars.size() : instances.size();
  }
};

}  // namespace cmos
