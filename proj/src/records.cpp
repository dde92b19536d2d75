#include "cmos/records.hpp"

#include "cmos/errors.hpp"

namespace cmos {

const char* subject_name(Subject s) {
  switch (s) {
    case Subject::NAT: return "NAT";
    case Subject::SOC: return "SOC";
    case Subject::LAN: return "LAN";
    case Subject::Custom: return "custom";
  }
  return "custom";
}

const char* grade_name(GradeBand g) {
  return g == GradeBand::G1_6 ? "G1-6" : "G7-12";
}

const char* split_name(SplitKind k) {
  switch (k) {
    case SplitKind::D_O: return "D_O";
    case SplitKind::D_E: return "D_E";
    case SplitKind::D_C: return "D_C";
    case SplitKind::D_Q: return "D_Q";
    case SplitKind::Custom: return "custom";
  }
  return "custom";
}

Subject parse_subject(const std::string& s) {
  if (s == "NAT") return Subject::NAT;
  if (s == "SOC") return Subject::SOC;
  if (s == "LAN") return Subject::LAN;
  return Subject::Custom;
}

GradeBand parse_grade(const std::string& s) {
  if (s == "G1-6" || s == "G1_6") return GradeBand::G1_6;
  if (s == "G7-12" || s == "G7_12") return GradeBand::G7_12;
  throw Error(Err::SchemaViolation, "unknown grade band '" + s + "'");
}

SplitKind parse_split_kind(const std::string& s) {
  if (s == "D_O") return SplitKind::D_O;
  if (s == "D_E") return SplitKind::D_E;
  if (s == "D_C") return SplitKind::D_C;
  if (s == "D_Q") return SplitKind::D_Q;
  return SplitKind::Custom;
}

}  // namespace cmos
