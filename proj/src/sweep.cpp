#include "cmos/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cmos/errors.hpp"
#include "cmos/ssim.hpp"
#include "cmos/text_metrics.hpp"
#include "cmos/util.hpp"

namespace cmos {

using nlohmann::json;

json SweepReport::to_json() const {
  json rows_json = json::array();
  for (const SweepRow& row : rows) {
    json r{{"value", row.value}};
    for (const auto& [metric, v] : row.metrics) r[metric] = v;
    rows_json.push_back(std::move(r));
  }
  return json{{"param", param},
              {"primary_metric", primary_metric},
              {"rows", std::move(rows_json)},
              {"argmax_index", argmax_index},
              {"argmax_value", argmax_value()}};
}

std::string SweepReport::to_table() const {
  std::string out = param;
  std::vector<std::string> metrics;
  if (!rows.empty())
    for (const auto& [metric, _] : rows.front().metrics) metrics.push_back(metric);
  char buf[64];
  for (const std::string& m : metrics) {
    std::snprintf(buf, sizeof(buf), "  %14s", m.c_str());
    out += buf;
  }
  out += "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%-5.2f", rows[i].value);
    out += buf;
    for (const std::string& m : metrics) {
      std::snprintf(buf, sizeof(buf), "  %14.6f", rows[i].metrics.at(m));
      out += buf;
    }
    if (i == argmax_index) out += "  <- argmax";
    out += "\n";
  }
  return out;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (step <= 0.0 || hi < lo) throw Error(Err::EmptyGrid, "bad grid bounds");
  std::vector<double> grid;
  for (int i = 0;; ++i) {
    double v = lo + step * i;
    if (v > hi + 1e-9) break;
    grid.push_back(std::round(v * 1e6) / 1e6);
  }
  if (grid.empty()) throw Error(Err::EmptyGrid, "grid has no points");
  return grid;
}

namespace {

AlphaAuditRecord audit_from_bundle_json(const json& j) {
  QuestionBundle bundle = bundle_from_json(j);
  AlphaAuditRecord rec;
  rec.id = bundle.instance.id;
  rec.candidates = std::move(bundle.selection.scored);
  rec.v_i = std::move(bundle.v_i);
  rec.v_p = std::move(bundle.v_p);
  return rec;
}

AlphaAuditRecord audit_from_record_json(const json& j) {
  AlphaAuditRecord rec;
  rec.id = j.at("id").get<std::string>();
  for (const json& c : j.at("candidates")) {
    QrCandidate cand;
    cand.question = c.at("question").get<std::string>();
    cand.reason = c.at("reason").get<std::string>();
    cand.q_vec = {c.at("q_vec").at("values").get<std::vector<double>>(),
                  c.at("q_vec").at("encoder_id").get<std::string>()};
    cand.r_vec = {c.at("r_vec").at("values").get<std::vector<double>>(),
                  c.at("r_vec").at("encoder_id").get<std::string>()};
    rec.candidates.push_back(std::move(cand));
  }
  if (j.contains("v_i"))
    rec.v_i = Embedding{j.at("v_i").at("values").get<std::vector<double>>(),
                        j.at("v_i").at("encoder_id").get<std::string>()};
  rec.v_p = {j.at("v_p").at("values").get<std::vector<double>>(),
             j.at("v_p").at("encoder_id").get<std::string>()};
  return rec;
}

}  // namespace

std::vector<AlphaAuditRecord> load_alpha_audits(const std::filesystem::path& path) {
  std::vector<AlphaAuditRecord> records;
  if (std::filesystem::is_directory(path)) {
    for (const QuestionBundle& b : load_bundles(path)) {
      AlphaAuditRecord rec;
      rec.id = b.instance.id;
      rec.candidates = b.selection.scored;
      rec.v_i = b.v_i;
      rec.v_p = b.v_p;
      records.push_back(std::move(rec));
    }
    return records;
  }
  std::ifstream in(path);
  if (!in) throw Error(Err::FileNotFound, path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    records.push_back(j.contains("audit") ? audit_from_bundle_json(j)
                                          : audit_from_record_json(j));
  }
  return records;
}

SweepReport sweep_alpha(std::span<const AlphaAuditRecord> records,
                        const std::map<std::string, std::string>& question_refs,
                        std::span<const double> grid) {
  if (grid.empty()) throw Error(Err::EmptyGrid, "alpha sweep over empty grid");
  if (records.empty()) throw Error(Err::EmptyInput, "alpha sweep without audits");

  std::vector<const AlphaAuditRecord*> covered;
  for (const AlphaAuditRecord& rec : records)
    if (question_refs.count(rec.id)) covered.push_back(&rec);
  if (covered.empty())
    throw Error(Err::IdMismatch, "no audit id is covered by the references");

  SweepReport report;
  report.param = "alpha";
  report.primary_metric = "bleu4";
  for (double alpha : grid) {
    OqrmConfig cfg;
    cfg.alpha = alpha;
    double bleu_total = 0.0, rouge_total = 0.0;
    for (const AlphaAuditRecord* rec : covered) {
      Selection sel = select_optimal(rec->candidates, cfg, rec->v_i, rec->v_p);
      const std::string& ref = question_refs.at(rec->id);
      std::vector<std::string> refs{ref};
      bleu_total += bleu4(sel.winner().question, refs);
      rouge_total += rouge_l(sel.winner().question, ref);
    }
    SweepRow row;
    row.value = alpha;
    row.metrics["bleu4"] = bleu_total / static_cast<double>(covered.size());
    row.metrics["rouge_l"] = rouge_total / static_cast<double>(covered.size());
    report.rows.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    if (report.rows[i].metrics["bleu4"] >
        report.rows[report.argmax_index].metrics["bleu4"])
      report.argmax_index = i;
  return report;
}

std::vector<BetaSweepOption> load_beta_options(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Err::FileNotFound, path.string());
  std::vector<BetaSweepOption> options;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    options.push_back({j.at("instance_id").get<std::string>(),
                       j.at("label").get<std::string>(),
                       j.at("description").get<std::string>()});
  }
  return options;
}

SweepReport sweep_beta(const ImageBank& bank,
                       std::span<const BetaSweepOption> options,
                       const TuneConfig& base_cfg, ChatModel& chat,
                       ImageGenerator& t2i, TextEncoder& text_enc,
                       ImageEncoder& image_enc, const TemplateSet& templates,
                       std::optional<long long> seed,
                       std::span<const double> grid) {
  if (grid.empty()) throw Error(Err::EmptyGrid, "beta sweep over empty grid");
  if (options.empty()) throw Error(Err::EmptyInput, "beta sweep without options");

  SweepReport report;
  report.param = "beta";
  report.primary_metric = "clip_t";
  for (double beta : grid) {
    TuneConfig cfg = base_cfg;
    cfg.beta = beta;
    double clip_total = 0.0;
    double template_total = 0.0;
    for (const BetaSweepOption& src : options) {
      CallScope scope("sweep:beta", src.instance_id);
      OptionCandidate opt;
      opt.label = src.label;
      opt.text = src.description;
      opt.description = src.description;
      TemplateHit hit = retrieve_template(bank, opt.description, beta, text_enc);
      const ImageBankItem& item = bank.items[hit.index];
      opt.template_ref = TemplateRef{item.id, item.image_ref, item.caption, hit.score};
      synthesize_visual(opt, cfg, chat, t2i, templates, seed);
      const std::string& final_image =
          opt.attempts[opt.selected_attempt].image_ref;
      clip_total += clip_t(final_image, opt.description, image_enc, text_enc);
      template_total += hit.score;
    }
    SweepRow row;
    row.value = beta;
    row.metrics["clip_t"] = clip_total / static_cast<double>(options.size());
    row.metrics["template_score"] =
        template_total / static_cast<double>(options.size());
    report.rows.push_back(std::move(row));
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    if (report.rows[i].metrics["clip_t"] >
        report.rows[report.argmax_index].metrics["clip_t"])
      report.argmax_index = i;
  return report;
}

}  // namespace cmos
