#include "cmos/option_synthesis.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "cmos/errors.hpp"
#include "cmos/util.hpp"

namespace cmos {

using nlohmann::json;

void TuneConfig::validate() const {
  if (sigma <= 0.0 || sigma > 1.0)
    throw Error(Err::ConfigError, "sigma must be in (0, 1]");
  if (max_rounds < 0) throw Error(Err::ConfigError, "max_rounds must be >= 0");
  if (beta < 0.0) throw Error(Err::ConfigError, "beta must be >= 0");
  if (t < 2 || t > 6) throw Error(Err::ConfigError, "option count t must be in [2, 6]");
}

ImageBank build_image_bank(std::span<const BankSource> sources,
                           ImageEncoder& image_enc, TextEncoder& text_enc,
                           ChatModel* captioner, const TemplateSet* templates) {
  if (sources.empty()) throw Error(Err::EmptyInput, "image bank from no sources");
  ImageBank bank;
  bank.text_encoder_id = text_enc.encoder_id();
  bank.image_encoder_id = image_enc.encoder_id();
  for (const BankSource& src : sources) {
    ImageBankItem item;
    item.id = src.id;
    item.image_ref = src.image_ref;
    if (src.caption) {
      item.caption = *src.caption;
    } else {
      if (!captioner || !templates)
        throw Error(Err::CaptioningFailure,
                    "item '" + src.id + "' has no caption and no captioner");
      ChatRequest req;
      req.messages.push_back(
          {"user",
           {{MessagePart::Kind::Text,
             render_template(templates->get("caption"), {{"image", "[image attached]"}})},
            {MessagePart::Kind::ImageRef, src.image_ref}}});
      req.tag = "caption:" + src.id;
      try {
        std::string reply = captioner->chat(req).text;
        std::size_t colon = to_lower(reply).find("caption");
        if (colon != std::string::npos) colon = reply.find(':', colon);
        item.caption = trim(colon == std::string::npos ? reply
                                                       : reply.substr(colon + 1));
      } catch (const Error& e) {
        throw Error(Err::CaptioningFailure, "item '" + src.id + "': " + e.what());
      }
      if (item.caption.empty())
        throw Error(Err::CaptioningFailure, "item '" + src.id + "': empty caption");
    }
    try {
      item.v_img = image_enc.embed_image(item.image_ref);
      item.v_cap = text_enc.embed_text(item.caption);
    } catch (const Error& e) {
      throw Error(Err::EncoderFailure, "item '" + src.id + "': " + e.what());
    }
    bank.items.push_back(std::move(item));
  }
  return bank;
}

void save_bank(const ImageBank& bank, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "bank.jsonl", std::ios::trunc);
  std::ofstream sidecar(dir / "bank_embeddings.jsonl", std::ios::trunc);
  if (!manifest || !sidecar)
    throw Error(Err::IoError, "cannot write bank files under " + dir.string());
  sidecar << json{{"text_encoder_id", bank.text_encoder_id},
                  {"image_encoder_id", bank.image_encoder_id}}
                 .dump()
          << "\n";
  for (const ImageBankItem& item : bank.items) {
    manifest << json{{"id", item.id}, {"path", item.image_ref}, {"caption", item.caption}}
                    .dump()
             << "\n";
    sidecar << json{{"id", item.id},
                    {"v_img", {{"encoder_id", item.v_img.encoder_id},
                               {"values", item.v_img.values}}},
                    {"v_cap", {{"encoder_id", item.v_cap.encoder_id},
                               {"values", item.v_cap.values}}}}
                   .dump()
            << "\n";
  }
}

std::vector<BankSource> load_bank_sources(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(Err::FileNotFound, manifest.string());
  std::vector<BankSource> out;
  std::string line;
  const std::filesystem::path base = manifest.parent_path();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    BankSource src;
    src.id = j.at("id").get<std::string>();
    std::filesystem::path p = j.at("path").get<std::string>();
    src.image_ref = p.is_absolute() ? p.string() : (base / p).string();
    if (j.contains("caption") && !j.at("caption").is_null())
      src.caption = j.at("caption").get<std::string>();
    out.push_back(std::move(src));
  }
  return out;
}

ImageBank load_bank(const std::filesystem::path& dir) {
  std::vector<BankSource> sources = load_bank_sources(dir / "bank.jsonl");
  std::ifstream in(dir / "bank_embeddings.jsonl");
  if (!in) throw Error(Err::FileNotFound, (dir / "bank_embeddings.jsonl").string());
  std::string line;
  if (!std::getline(in, line))
    throw Error(Err::SchemaViolation, "empty bank embedding sidecar");
  json header = json::parse(line);

  ImageBank bank;
  bank.text_encoder_id = header.at("text_encoder_id").get<std::string>();
  bank.image_encoder_id = header.at("image_encoder_id").get<std::string>();

  std::map<std::string, json> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    rows[j.at("id").get<std::string>()] = j;
  }
  for (const BankSource& src : sources) {
    auto it = rows.find(src.id);
    if (it == rows.end())
      throw Error(Err::SchemaViolation, "bank sidecar missing item '" + src.id + "'");
    ImageBankItem item;
    item.id = src.id;
    item.image_ref = src.image_ref;
    item.caption = src.caption.value_or("");
    const json& j = it->second;
    item.v_img = {j.at("v_img").at("values").get<std::vector<double>>(),
                  j.at("v_img").at("encoder_id").get<std::string>()};
    item.v_cap = {j.at("v_cap").at("values").get<std::vector<double>>(),
                  j.at("v_cap").at("encoder_id").get<std::string>()};
    bank.items.push_back(std::move(item));
  }
  return bank;
}

TemplateHit retrieve_template(const ImageBank& bank, const Embedding& psi_d,
                              double beta) {
  if (bank.empty()) throw Error(Err::EmptyBank, "template retrieval over empty bank");
  TemplateHit best;
  bool first = true;
  for (std::size_t j = 0; j < bank.items.size(); ++j) {
    const ImageBankItem& item = bank.items[j];
    double score = beta * cosine(item.v_img, psi_d) + cosine(item.v_cap, psi_d);
    if (first || score > best.score) {
      best = {j, score};
      first = false;
    }
  }
  return best;
}

TemplateHit retrieve_template(const ImageBank& bank, const std::string& description,
                              double beta, TextEncoder& text_enc) {
  if (description.empty())
    throw Error(Err::EmptyInput, "template retrieval with empty description");
  return retrieve_template(bank, text_enc.embed_text(description), beta);
}

namespace {

std::string normalize_answer(const std::string& s) {
  std::string out;
  for (const std::string& tok : tokenize(s)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace

std::vector<OptionCandidate> parse_options(const std::string& raw, int t,
                                           const std::string& answer) {
  std::vector<OptionCandidate> options;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    if (eol == std::string::npos) eol = raw.size();
    std::string line = trim(raw.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;

    // Accepted shapes: "Option (a): text | Description: ..." and
    // "(a) text | Description: ...".
    std::string lower = to_lower(line);
    std::size_t open = lower.find('(');
    if (open == std::string::npos) continue;
    bool labeled = lower.rfind("option", 0) == 0 || open == 0;
    if (!labeled) continue;
    std::size_t close = line.find(')', open);
    if (close == std::string::npos || close != open + 2) continue;

    OptionCandidate opt;
    opt.label = std::string(1, static_cast<char>(std::tolower(
                                   static_cast<unsigned char>(line[open + 1]))));
    std::size_t body_start = close + 1;
    if (body_start < line.size() && line[body_start] == ':') ++body_start;
    std::size_t bar = line.find('|', body_start);
    std::string body = trim(line.substr(
        body_start, bar == std::string::npos ? std::string::npos : bar - body_start));
    std::string desc;
    if (bar != std::string::npos) {
      std::string tail = line.substr(bar + 1);
      std::size_t dcolon = to_lower(tail).find("description");
      if (dcolon != std::string::npos) {
        std::size_t colon = tail.find(':', dcolon);
        if (colon != std::string::npos) desc = trim(tail.substr(colon + 1));
      } else {
        desc = trim(tail);
      }
    }
    opt.text = body;
    opt.description = desc;
    options.push_back(std::move(opt));
  }

  if (static_cast<int>(options.size()) != t)
    throw Error(Err::ParseFailure,
                "expected " + std::to_string(t) + " options, found " +
                    std::to_string(options.size()) + " in reply: " + raw);
  for (const OptionCandidate& opt : options) {
    if (opt.text.empty() || opt.description.empty())
      throw Error(Err::ParseFailure,
                  "option (" + opt.label + ") has empty text or description");
  }

  const std::string want = normalize_answer(answer);
  bool found = false;
  for (OptionCandidate& opt : options) {
    if (!found && normalize_answer(opt.text) == want) {
      opt.is_answer = true;
      found = true;
    }
  }
  if (!found)
    throw Error(Err::AnswerMissing,
                "no option matches the answer '" + answer + "'");
  return options;
}

std::vector<OptionCandidate> generate_options(const QrCandidate& pair,
                                              const ContentInstance& s,
                                              const Exemplar& retrieved,
                                              ChatModel& chat,
                                              const TemplateSet& templates, int t) {
  std::string prompt = render_template(
      templates.get("option_generation"),
      {{"context", s.context},
       {"question", pair.question},
       {"answer", s.answer},
       {"reason", pair.reason},
       {"t", std::to_string(t)},
       {"ex_context", retrieved.instance.context},
       {"ex_question", retrieved.question.value_or("(not recorded)")},
       {"ex_answer", retrieved.instance.answer},
       {"ex_reason", retrieved.reason}});
  ChatRequest req;
  req.messages.push_back({"user", {{MessagePart::Kind::Text, prompt}}});
  req.tag = "optgen:" + s.id;

  ChatResponse resp = chat.chat(req);
  try {
    return parse_options(resp.text, t, s.answer);
  } catch (const Error& e) {
    if (e.code() != Err::AnswerMissing) throw;
    ChatRequest retry = req;
    retry.tag = req.tag + ":retry";
    retry.messages.push_back({"assistant", {{MessagePart::Kind::Text, resp.text}}});
    retry.messages.push_back(
        {"user",
         {{MessagePart::Kind::Text,
           "One option must be exactly the answer: " + s.answer +
               ". Reply again in the same format."}}});
    return parse_options(chat.chat(retry).text, t, s.answer);
  }
}

EvalVerdict parse_eval_reply(const std::string& raw) {
  const std::string lower = to_lower(raw);
  std::size_t last = std::string::npos;
  for (std::size_t from = 0;;) {
    std::size_t pos = lower.find("score", from);
    if (pos == std::string::npos) break;
    std::size_t colon = lower.find(':', pos);
    if (colon != std::string::npos) last = colon;
    from = pos + 1;
  }
  if (last == std::string::npos)
    throw Error(Err::ScoreParseFailure, "no score marker in reply: " + raw);
  EvalVerdict v;
  try {
    std::size_t idx = 0;
    std::string tail = raw.substr(last + 1);
    v.score = std::stod(tail, &idx);
  } catch (const std::exception&) {
    throw Error(Err::ScoreParseFailure, "unparseable score in reply: " + raw);
  }
  if (v.score < 0.0 || v.score > 1.0)
    throw Error(Err::ScoreParseFailure,
                "score out of [0, 1] in reply: " + raw);
  std::size_t s_pos = lower.find("suggestion");
  if (s_pos != std::string::npos) {
    std::size_t colon = raw.find(':', s_pos);
    if (colon != std::string::npos) v.suggestions = trim(raw.substr(colon + 1));
  }
  return v;
}

namespace {

EvalVerdict evaluate_attempt(const std::string& image_ref,
                             const OptionCandidate& opt, ChatModel& chat,
                             const TemplateSet& templates,
                             const std::string& tag, SynthesisTrace* trace) {
  ChatRequest req;
  req.messages.push_back(
      {"user",
       {{MessagePart::Kind::Text,
         render_template(templates.get("optimization"),
                         {{"image", "[image attached]"},
                          {"description", opt.description},
                          {"template_image", "[image attached]"}})},
        {MessagePart::Kind::ImageRef, image_ref},
        {MessagePart::Kind::ImageRef, opt.template_ref->image_ref}}});
  req.tag = tag;
  if (trace) ++trace->eval_calls;
  ChatResponse resp = chat.chat(req);
  try {
    return parse_eval_reply(resp.text);
  } catch (const Error& e) {
    if (e.code() != Err::ScoreParseFailure) throw;
    ChatRequest retry = req;
    retry.tag = tag + ":retry";
    retry.messages.push_back({"assistant", {{MessagePart::Kind::Text, resp.text}}});
    retry.messages.push_back(
        {"user",
         {{MessagePart::Kind::Text,
           "Reply in exactly this format:\nScore: <number between 0.00 and "
           "1.00>\nSuggestions: <one sentence>"}}});
    if (trace) ++trace->eval_calls;
    try {
      return parse_eval_reply(chat.chat(retry).text);
    } catch (const Error& e2) {
      if (e2.code() != Err::ScoreParseFailure) throw;
      return {0.0, ""};  // treat the attempt as scored 0 and continue
    }
  }
}

}  // namespace

void synthesize_visual(OptionCandidate& opt, const TuneConfig& cfg,
                       ChatModel& chat, ImageGenerator& t2i,
                       const TemplateSet& templates,
                       std::optional<long long> seed, SynthesisTrace* trace) {
  cfg.validate();
  if (!opt.template_ref)
    throw Error(Err::EmptyBank, "option (" + opt.label + ") has no template");
  if (opt.description.empty())
    throw Error(Err::EmptyInput, "option (" + opt.label + ") has no description");

  std::string base_prompt = render_template(
      templates.get("visual_option"),
      {{"option", opt.text}, {"description", opt.description}});

  std::string suggestions_acc;
  opt.attempts.clear();
  opt.accepted = false;
  opt.below_threshold = false;

  for (int round = 0; round <= cfg.max_rounds; ++round) {
    std::string prompt = base_prompt;
    if (!suggestions_acc.empty())
      prompt += "\nImprovement suggestions:\n" + suggestions_acc;
    if (trace) ++trace->t2i_calls;
    std::string image_ref =
        t2i.generate_image(prompt, opt.template_ref->image_ref, seed);

    EvalVerdict verdict = evaluate_attempt(
        image_ref, opt, chat, templates,
        "eval:" + CallScope::instance() + ":" + opt.label + ":" +
            std::to_string(round),
        trace);
    opt.attempts.push_back({image_ref, verdict.score, verdict.suggestions});

    if (verdict.score >= cfg.sigma) {  // "meets or exceeds"
      opt.accepted = true;
      opt.selected_attempt = opt.attempts.size() - 1;
      return;
    }
    if (!verdict.suggestions.empty())
      suggestions_acc += "- " + verdict.suggestions + "\n";
  }

  opt.below_threshold = true;
  std::size_t best = 0;
  for (std::size_t i = 1; i < opt.attempts.size(); ++i)
    if (opt.attempts[i].score > opt.attempts[best].score) best = i;
  opt.selected_attempt = best;
}

}  // namespace cmos
