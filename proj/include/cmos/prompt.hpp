#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace cmos {

struct PromptTemplate {
  std::string name;
  std::string text;
  std::string version_hash;  // first 12 hex chars of sha256(text)
};

// Prompt templates are external text files with {{placeholder}} substitution.
// Every stage records the template version hash it rendered with.
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& dir);

  const PromptTemplate& get(const std::string& name) const;
  bool has(const std::string& name) const;
  // Combined fingerprint over all templates, order-independent.
  std::string combined_version() const;

  static const char* const kRequired[];

 private:
  std::map<std::string, PromptTemplate> templates_;
};

// Replaces every {{key}}; an unresolved placeholder is an error naming it.
std::string render_template(const PromptTemplate& tmpl,
                            const std::map<std::string, std::string>& subs);

}  // namespace cmos
