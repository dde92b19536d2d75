#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmos/backends.hpp"
#include "cmos/prompt.hpp"
#include "cmos/records.hpp"

namespace cmos {

struct TuneConfig {
  double beta = 1.4;   // image-description weight in template retrieval
  double sigma = 0.8;  // acceptance threshold ("meets or exceeds")
  int max_rounds = 3;  // tuning iterations after the initial attempt
  int t = 4;           // option count

  void validate() const;
};

struct ImageBankItem {
  std::string id;
  std::string image_ref;
  std::string caption;
  Embedding v_img;
  Embedding v_cap;
};

struct ImageBank {
  std::vector<ImageBankItem> items;
  std::string text_encoder_id;
  std::string image_encoder_id;

  bool empty() const { return items.empty(); }
};

struct BankSource {
  std::string id;
  std::string image_ref;
  std::optional<std::string> caption;  // captioned via chat when absent
};

// Embeds every image and caption; missing captions cost one chat call each.
ImageBank build_image_bank(std::span<const BankSource> sources,
                           ImageEncoder& image_enc, TextEncoder& text_enc,
                           ChatModel* captioner, const TemplateSet* templates);

// Bank manifest: record-per-line {id, path, caption} plus embedding sidecar.
void save_bank(const ImageBank& bank, const std::filesystem::path& dir);
ImageBank load_bank(const std::filesystem::path& dir);
std::vector<BankSource> load_bank_sources(const std::filesystem::path& manifest);

struct TemplateHit {
  std::size_t index = 0;
  double score = 0.0;
};

// argmax_j of beta * cos(v_img_j, psi(d)) + cos(v_cap_j, psi(d)); ties break
// to the lowest index.
TemplateHit retrieve_template(const ImageBank& bank, const Embedding& psi_d,
                              double beta);
TemplateHit retrieve_template(const ImageBank& bank, const std::string& description,
                              double beta, TextEncoder& text_enc);

// Parses the option-generation reply into exactly t options with nonempty
// descriptions; exactly one option must match the known answer (one re-ask,
// then AnswerMissing).
std::vector<OptionCandidate> parse_options(const std::string& raw, int t,
                                           const std::string& answer);

std::vector<OptionCandidate> generate_options(const QrCandidate& pair,
                                              const ContentInstance& s,
                                              const Exemplar& retrieved,
                                              ChatModel& chat,
                                              const TemplateSet& templates, int t);

struct EvalVerdict {
  double score = 0.0;
  std::string suggestions;
};

// Parses "Score: <0..1>" (last marker wins) and "Suggestions: ...".
EvalVerdict parse_eval_reply(const std::string& raw);

struct SynthesisTrace {
  int t2i_calls = 0;
  int eval_calls = 0;
};

// The generate-evaluate-tune loop. Requires opt.template_ref and a nonempty
// description; appends every attempt, accepts at score >= sigma, otherwise
// folds the evaluator's suggestions into the next generation prompt, at most
// max_rounds extra rounds. If nothing reaches sigma the best attempt is kept
// and the option is flagged below_threshold.
void synthesize_visual(OptionCandidate& opt, const TuneConfig& cfg,
                       ChatModel& chat, ImageGenerator& t2i,
                       const TemplateSet& templates,
                       std::optional<long long> seed,
                       SynthesisTrace* trace = nullptr);

}  // namespace cmos
