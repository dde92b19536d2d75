#include "cmos/prompt.hpp"

#include "cmos/errors.hpp"
#include "cmos/sha256.hpp"
#include "cmos/util.hpp"

namespace cmos {

const char* const TemplateSet::kRequired[] = {
    "exemplar_construction", "discrimination",  "question_generation",
    "qg_exemplar_block",     "option_generation", "optimization",
    "visual_option",         "caption",           nullptr,
};

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet set;
  for (int i = 0; kRequired[i]; ++i) {
    std::filesystem::path file = dir / (std::string(kRequired[i]) + ".tmpl");
    if (!std::filesystem::exists(file))
      throw Error(Err::TemplateMissing, "template file not found: " + file.string());
    PromptTemplate t;
    t.name = kRequired[i];
    t.text = read_text_file(file);
    t.version_hash = sha256_hex(t.text).substr(0, 12);
    set.templates_.emplace(t.name, std::move(t));
  }
  return set;
}

const PromptTemplate& TemplateSet::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end())
    throw Error(Err::TemplateMissing, "no template named '" + name + "'");
  return it->second;
}

bool TemplateSet::has(const std::string& name) const {
  return templates_.count(name) > 0;
}

std::string TemplateSet::combined_version() const {
  std::string all;
  for (const auto& [name, t] : templates_) all += name + ":" + t.version_hash + ";";
  return sha256_hex(all).substr(0, 12);
}

std::string render_template(const PromptTemplate& tmpl,
                            const std::map<std::string, std::string>& subs) {
  std::string out;
  out.reserve(tmpl.text.size());
  std::size_t pos = 0;
  while (pos < tmpl.text.size()) {
    std::size_t open = tmpl.text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tmpl.text, pos, std::string::npos);
      break;
    }
    out.append(tmpl.text, pos, open - pos);
    std::size_t close = tmpl.text.find("}}", open + 2);
    if (close == std::string::npos)
      throw Error(Err::TemplateMissing,
                  "unterminated placeholder in template '" + tmpl.name + "'");
    std::string key = tmpl.text.substr(open + 2, close - open - 2);
    auto it = subs.find(key);
    if (it == subs.end())
      throw Error(Err::TemplateMissing, "unresolved placeholder '" + key +
                                            "' in template '" + tmpl.name + "'");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

}  // namespace cmos
