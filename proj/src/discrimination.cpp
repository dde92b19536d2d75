#include "cmos/discrimination.hpp"

#include <algorithm>

#include "cmos/errors.hpp"
#include "cmos/util.hpp"

namespace cmos {

namespace {

// Position of the last occurrence of any marker ("<name>" then optional
// spaces then ':'), searched case-insensitively. Returns the position right
// after the colon, or npos.
struct MarkerHit {
  std::size_t start = std::string::npos;  // start of the marker word
  std::size_t value_begin = std::string::npos;
};

MarkerHit find_last_marker(const std::string& lower,
                           std::initializer_list<const char*> names) {
  MarkerHit best;
  for (const char* name : names) {
    std::size_t from = 0;
    for (;;) {
      std::size_t pos = lower.find(name, from);
      if (pos == std::string::npos) break;
      std::size_t colon = pos + std::string(name).size();
      while (colon < lower.size() && (lower[colon] == ' ' || lower[colon] == '\t'))
        ++colon;
      if (colon < lower.size() && lower[colon] == ':') {
        if (best.start == std::string::npos || pos > best.start)
          best = {pos, colon + 1};
      }
      from = pos + 1;
    }
  }
  return best;
}

std::string first_word(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  std::size_t e = b;
  while (e < s.size() && (std::isalnum(static_cast<unsigned char>(s[e])))) ++e;
  return s.substr(b, e - b);
}

}  // namespace

Judgment parse_judgment(const std::string& raw) {
  const std::string lower = to_lower(raw);

  MarkerHit verdict = find_last_marker(lower, {"judgment", "convertible"});
  if (verdict.value_begin == std::string::npos)
    throw Error(Err::ParseFailure, "no judgment marker in reply: " + raw);

  std::string token = to_lower(first_word(raw.substr(verdict.value_begin)));
  bool convertible;
  if (token == "true" || token == "yes")
    convertible = true;
  else if (token == "false" || token == "no")
    convertible = false;
  else
    throw Error(Err::ParseFailure,
                "unrecognized judgment token '" + token + "' in reply: " + raw);

  // Reason: last reason marker before the verdict, captured up to the verdict.
  std::string head_lower = lower.substr(0, verdict.start);
  MarkerHit reason = find_last_marker(head_lower, {"reasoning", "reason"});
  if (reason.value_begin == std::string::npos)
    throw Error(Err::ParseFailure, "no reason marker in reply: " + raw);
  std::string reason_text =
      trim(raw.substr(reason.value_begin, verdict.start - reason.value_begin));
  if (reason_text.empty())
    throw Error(Err::ParseFailure, "empty reason in reply: " + raw);

  return Judgment{convertible, reason_text, raw};
}

std::string render_judgment(const Judgment& j) {
  return "Reason: " + j.reason + "\nJudgment: " + (j.convertible ? "TRUE" : "FALSE");
}

namespace {

std::map<std::string, std::string> base_subs(const ContentInstance& s) {
  return {
      {"context", s.context},
      {"image", s.image_ref ? "[image attached]" : "(none)"},
      {"answer", s.answer},
  };
}

void attach_images(ChatRequest& req, const ContentInstance& s) {
  if (s.image_ref)
    req.messages.front().parts.push_back(
        {MessagePart::Kind::ImageRef, *s.image_ref});
}

void check_size(const ChatRequest& req) {
  if (req.total_size() > kMaxPromptChars)
    throw Error(Err::OversizePrompt,
                "prompt of " + std::to_string(req.total_size()) + " chars");
}

// One chat exchange with a single re-ask on unparseable replies.
Judgment ask_with_retry(ChatModel& chat, ChatRequest req) {
  ChatResponse resp = chat.chat(req);
  try {
    return parse_judgment(resp.text);
  } catch (const Error& e) {
    if (e.code() != Err::ParseFailure) throw;
    ChatRequest retry = req;
    retry.tag = req.tag.empty() ? "" : req.tag + ":retry";
    retry.messages.push_back({"assistant", {{MessagePart::Kind::Text, resp.text}}});
    retry.messages.push_back(
        {"user",
         {{MessagePart::Kind::Text,
           "Reply in exactly this format and nothing else:\nReason: <one or "
           "two sentences>\nJudgment: <TRUE or FALSE>"}}});
    return parse_judgment(chat.chat(retry).text);
  }
}

}  // namespace

ChatRequest build_discrimination_prompt(const ContentInstance& s,
                                        const Exemplar& ex,
                                        const TemplateSet& templates) {
  if (ex.reason.empty())
    throw Error(Err::TemplateMissing,
                "exemplar '" + ex.instance.id + "' has no reason text");
  auto subs = base_subs(s);
  subs["ex_context"] = ex.instance.context;
  subs["ex_image"] = ex.instance.image_ref ? "[image attached]" : "(none)";
  subs["ex_answer"] = ex.instance.answer;
  subs["ex_reason"] = ex.reason;
  subs["ex_judgment"] = ex.convertible ? "TRUE" : "FALSE";

  ChatRequest req;
  req.messages.push_back(
      {"user",
       {{MessagePart::Kind::Text,
         render_template(templates.get("discrimination"), subs)}}});
  attach_images(req, s);
  attach_images(req, ex.instance);
  req.tag = "discriminate:" + s.id;
  check_size(req);
  return req;
}

DiscriminationResult discriminate(const ContentInstance& s,
                                  const ExemplarStore& store,
                                  const QueryEmbeddings& query, ChatModel& chat,
                                  const TemplateSet& templates) {
  RetrievalHit hit = retrieve_best(store, query);
  ChatRequest req = build_discrimination_prompt(
      s, store.entries[hit.index].exemplar, templates);
  Judgment judgment = ask_with_retry(chat, std::move(req));
  return {std::move(judgment), hit,
          templates.get("discrimination").version_hash};
}

Exemplar construct_exemplar(const ContentInstance& s,
                            const std::optional<std::string>& original_question,
                            ChatModel& chat, const TemplateSet& templates) {
  ChatRequest req;
  req.messages.push_back(
      {"user",
       {{MessagePart::Kind::Text,
         render_template(templates.get("exemplar_construction"), base_subs(s))}}});
  attach_images(req, s);
  req.tag = "construct:" + s.id;
  check_size(req);

  Judgment judgment = ask_with_retry(chat, std::move(req));
  Exemplar ex;
  ex.instance = s;
  ex.convertible = judgment.convertible;
  ex.reason = judgment.reason;
  ex.question = original_question;
  return ex;
}

}  // namespace cmos
