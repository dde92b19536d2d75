#include "cmos/manifest.hpp"

#include <algorithm>
#include <fstream>

#include "cmos/dataset.hpp"
#include "cmos/errors.hpp"
#include "cmos/sha256.hpp"
#include "cmos/util.hpp"

namespace cmos {

using nlohmann::json;

namespace {

json embedding_json(const Embedding& e) {
  return json{{"encoder_id", e.encoder_id}, {"values", e.values}};
}

Embedding embedding_from(const json& j) {
  return {j.at("values").get<std::vector<double>>(),
          j.at("encoder_id").get<std::string>()};
}

json candidate_json(const QrCandidate& c) {
  json j{{"question", c.question},
         {"reason", c.reason},
         {"q_vec", embedding_json(c.q_vec)},
         {"r_vec", embedding_json(c.r_vec)},
         {"ext_image_term_omitted", c.ext_image_term_omitted}};
  if (c.c_int) j["c_int"] = *c.c_int;
  if (c.c_ext) j["c_ext"] = *c.c_ext;
  if (c.tms) j["tms"] = *c.tms;
  return j;
}

QrCandidate candidate_from(const json& j) {
  QrCandidate c;
  c.question = j.at("question").get<std::string>();
  c.reason = j.at("reason").get<std::string>();
  c.q_vec = embedding_from(j.at("q_vec"));
  c.r_vec = embedding_from(j.at("r_vec"));
  c.ext_image_term_omitted = j.value("ext_image_term_omitted", false);
  if (j.contains("c_int")) c.c_int = j.at("c_int").get<double>();
  if (j.contains("c_ext")) c.c_ext = j.at("c_ext").get<double>();
  if (j.contains("tms")) c.tms = j.at("tms").get<double>();
  return c;
}

json option_json(const OptionCandidate& o) {
  json attempts = json::array();
  for (const OptionAttempt& a : o.attempts)
    attempts.push_back({{"image", a.image_ref},
                        {"score", a.score},
                        {"suggestions", a.suggestions}});
  json j{{"label", o.label},
         {"text", o.text},
         {"is_answer", o.is_answer},
         {"description", o.description},
         {"attempts", std::move(attempts)},
         {"accepted", o.accepted},
         {"below_threshold", o.below_threshold},
         {"selected_attempt", o.selected_attempt}};
  if (o.template_ref)
    j["template"] = {{"id", o.template_ref->id},
                     {"image", o.template_ref->image_ref},
                     {"caption", o.template_ref->caption},
                     {"score", o.template_ref->score}};
  return j;
}

OptionCandidate option_from(const json& j) {
  OptionCandidate o;
  o.label = j.at("label").get<std::string>();
  o.text = j.at("text").get<std::string>();
  o.is_answer = j.at("is_answer").get<bool>();
  o.description = j.at("description").get<std::string>();
  for (const json& a : j.at("attempts"))
    o.attempts.push_back({a.at("image").get<std::string>(),
                          a.at("score").get<double>(),
                          a.value("suggestions", std::string())});
  o.accepted = j.at("accepted").get<bool>();
  o.below_threshold = j.at("below_threshold").get<bool>();
  o.selected_attempt = j.at("selected_attempt").get<std::size_t>();
  if (j.contains("template")) {
    const json& t = j.at("template");
    o.template_ref = TemplateRef{t.at("id").get<std::string>(),
                                 t.at("image").get<std::string>(),
                                 t.value("caption", std::string()),
                                 t.value("score", 0.0)};
  }
  return o;
}

}  // namespace

json bundle_to_json(const QuestionBundle& bundle) {
  json candidates = json::array();
  for (const QrCandidate& c : bundle.selection.scored)
    candidates.push_back(candidate_json(c));
  json options = json::array();
  for (const OptionCandidate& o : bundle.options) options.push_back(option_json(o));

  json audit{{"alpha", bundle.selection.alpha},
             {"winner", bundle.selection.winner_index},
             {"candidates", std::move(candidates)},
             {"v_p", embedding_json(bundle.v_p)}};
  if (bundle.v_i) audit["v_i"] = embedding_json(*bundle.v_i);

  return json{{"instance", instance_to_json(bundle.instance)},
              {"judgment",
               {{"convertible", bundle.judgment.convertible},
                {"reason", bundle.judgment.reason}}},
              {"question", bundle.winner().question},
              {"reason", bundle.winner().reason},
              {"options", std::move(options)},
              {"audit", std::move(audit)},
              {"template_version", bundle.template_version}};
}

QuestionBundle bundle_from_json(const json& j) {
  QuestionBundle b;
  b.instance = instance_from_json(j.at("instance"));
  b.judgment.convertible = j.at("judgment").at("convertible").get<bool>();
  b.judgment.reason = j.at("judgment").at("reason").get<std::string>();
  const json& audit = j.at("audit");
  b.selection.alpha = audit.at("alpha").get<double>();
  b.selection.winner_index = audit.at("winner").get<std::size_t>();
  for (const json& c : audit.at("candidates"))
    b.selection.scored.push_back(candidate_from(c));
  b.v_p = embedding_from(audit.at("v_p"));
  if (audit.contains("v_i")) b.v_i = embedding_from(audit.at("v_i"));
  for (const json& o : j.at("options")) b.options.push_back(option_from(o));
  b.template_version = j.value("template_version", std::string());
  return b;
}

json Manifest::to_json() const {
  json files_json = json::array();
  for (const ManifestFile& f : files)
    files_json.push_back({{"path", f.path}, {"sha256", f.sha256}, {"role", f.role}});
  json errors_json = json::array();
  for (const ItemError& e : errors)
    errors_json.push_back({{"id", e.id}, {"stage", e.stage}, {"message", e.message}});
  std::size_t generated = 0;
  for (const ManifestFile& f : files)
    if (f.role == "metadata") ++generated;
  return json{{"files", std::move(files_json)},
              {"config_fingerprint", config_fingerprint},
              {"seed", seed},
              {"inputs", inputs},
              {"generated", generated},
              {"errors", std::move(errors_json)},
              {"skipped_non_convertible", skipped_non_convertible}};
}

Manifest save_artifacts(std::span<const QuestionBundle> bundles,
                        const std::filesystem::path& dir,
                        const std::string& config_fingerprint, long long seed,
                        std::vector<ItemError> errors,
                        std::vector<std::string> skipped, std::size_t inputs) {
  std::filesystem::create_directories(dir);
  Manifest manifest;
  manifest.config_fingerprint = config_fingerprint;
  manifest.seed = seed;
  manifest.inputs = inputs;
  manifest.errors = std::move(errors);
  manifest.skipped_non_convertible = std::move(skipped);

  auto add_file = [&](const std::string& rel, const std::string& role) {
    manifest.files.push_back({rel, sha256_file_hex(dir / rel), role});
  };

  for (const QuestionBundle& bundle : bundles) {
    QuestionBundle local = bundle;  // image refs rewritten to copies
    for (OptionCandidate& opt : local.options) {
      for (std::size_t k = 0; k < opt.attempts.size(); ++k) {
        std::string rel = local.instance.id + "_" + opt.label + "_attempt" +
                          std::to_string(k) + ".pgm";
        std::filesystem::copy_file(opt.attempts[k].image_ref, dir / rel,
                                   std::filesystem::copy_options::overwrite_existing);
        opt.attempts[k].image_ref = rel;
        add_file(rel, "image");
      }
    }
    std::string meta_rel = "q_" + local.instance.id + ".json";
    write_text_file(dir / meta_rel, bundle_to_json(local).dump(2) + "\n");
    add_file(meta_rel, "metadata");
  }

  std::sort(manifest.files.begin(), manifest.files.end(),
            [](const ManifestFile& a, const ManifestFile& b) {
              return a.path < b.path;
            });
  write_text_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

std::vector<QuestionBundle> load_bundles(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("q_", 0) == 0 && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<QuestionBundle> bundles;
  for (const auto& file : files)
    bundles.push_back(bundle_from_json(json::parse(read_text_file(file))));
  return bundles;
}

}  // namespace cmos
