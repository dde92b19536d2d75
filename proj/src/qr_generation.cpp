#include "cmos/qr_generation.hpp"

#include <algorithm>

#include "cmos/errors.hpp"
#include "cmos/util.hpp"

namespace cmos {

void OqrmConfig::validate() const {
  if (alpha <= 0.0) throw Error(Err::ConfigError, "alpha must be > 0");
  if (m < 1) throw Error(Err::ConfigError, "candidate count m must be >= 1");
  if (photo_phrase_template.find("{answer}") == std::string::npos)
    throw Error(Err::ConfigError, "photo phrase template must contain {answer}");
}

std::string photo_phrase(const OqrmConfig& cfg, const std::string& answer) {
  std::string out = cfg.photo_phrase_template;
  auto pos = out.find("{answer}");
  out.replace(pos, 8, answer);
  return out;
}

std::pair<std::string, std::string> parse_question_reason(const std::string& raw) {
  const std::string lower = to_lower(raw);
  std::size_t q_pos = lower.find("question");
  std::size_t q_colon = q_pos == std::string::npos ? std::string::npos
                                                   : lower.find(':', q_pos);
  if (q_colon == std::string::npos)
    throw Error(Err::ParseFailure, "no question marker in reply: " + raw);
  std::size_t r_pos = lower.find("reason", q_colon);
  std::size_t r_colon = r_pos == std::string::npos ? std::string::npos
                                                   : lower.find(':', r_pos);
  if (r_colon == std::string::npos)
    throw Error(Err::ParseFailure, "no reason marker in reply: " + raw);

  std::string question = trim(raw.substr(q_colon + 1, r_pos - q_colon - 1));
  std::string reason = trim(raw.substr(r_colon + 1));
  if (question.empty() || reason.empty())
    throw Error(Err::ParseFailure, "empty question or reason in reply: " + raw);
  return {question, reason};
}

namespace {

std::string exemplar_block(const TemplateSet& templates, const StoreEntry& entry,
                           int ordinal) {
  const Exemplar& ex = entry.exemplar;
  return render_template(
      templates.get("qg_exemplar_block"),
      {{"n", std::to_string(ordinal)},
       {"context", ex.instance.context},
       {"image", ex.instance.image_ref ? "[image attached]" : "(none)"},
       {"answer", ex.instance.answer},
       {"question", ex.question.value_or("(not recorded)")},
       {"reason", ex.reason}});
}

}  // namespace

QgenOutcome generate_candidates(const ContentInstance& s, const Judgment& judgment,
                                const ExemplarStore& store,
                                const QueryEmbeddings& query, ChatModel& chat,
                                TextEncoder& text_enc, const TemplateSet& templates,
                                int m) {
  if (!judgment.convertible)
    throw Error(Err::ConfigError,
                "generate_candidates requires a convertible judgment");
  if (m < 1) throw Error(Err::ConfigError, "candidate count m must be >= 1");

  std::vector<RetrievalHit> top = retrieve_top_k(store, query, 3);
  std::string blocks;
  for (std::size_t i = 0; i < top.size(); ++i) {
    blocks += exemplar_block(templates, store.entries[top[i].index],
                             static_cast<int>(i) + 1);
  }

  std::string prompt = render_template(
      templates.get("question_generation"),
      {{"context", s.context},
       {"image", s.image_ref ? "[image attached]" : "(none)"},
       {"answer", s.answer},
       {"judgment", judgment.convertible ? "TRUE" : "FALSE"},
       {"exemplars", blocks}});

  QgenOutcome out;
  out.template_version = templates.get("question_generation").version_hash;
  for (int k = 0; k < m; ++k) {
    ChatRequest req;
    req.messages.push_back({"user", {{MessagePart::Kind::Text, prompt}}});
    if (s.image_ref)
      req.messages.front().parts.push_back(
          {MessagePart::Kind::ImageRef, *s.image_ref});
    for (const RetrievalHit& hit : top) {
      const auto& ex = store.entries[hit.index].exemplar;
      if (ex.instance.image_ref)
        req.messages.front().parts.push_back(
            {MessagePart::Kind::ImageRef, *ex.instance.image_ref});
    }
    req.tag = "qgen:" + s.id + ":" + std::to_string(k);

    ChatResponse resp = chat.chat(req);
    try {
      auto [question, reason] = parse_question_reason(resp.text);
      bool duplicate = std::any_of(
          out.candidates.begin(), out.candidates.end(),
          [&](const QrCandidate& c) {
            return c.question == question && c.reason == reason;
          });
      if (duplicate) {  // exact-string collapse only
        ++out.collapsed;
        continue;
      }
      QrCandidate cand;
      cand.question = std::move(question);
      cand.reason = std::move(reason);
      cand.q_vec = text_enc.embed_text(cand.question);
      cand.r_vec = text_enc.embed_text(cand.reason);
      out.candidates.push_back(std::move(cand));
    } catch (const Error& e) {
      if (e.code() != Err::ParseFailure) throw;
      out.dropped_raw.push_back(resp.text);
    }
  }
  if (out.candidates.empty())
    throw Error(Err::ParseFailure,
                "all " + std::to_string(m) + " candidate replies were unparseable");
  return out;
}

double internal_consistency(const QrCandidate& c, const Centroid& cq,
                            const Centroid& cr) {
  return cosine(c.q_vec, cq.mean) + cosine(c.r_vec, cr.mean);
}

double external_consistency(const QrCandidate& c,
                            const std::optional<Embedding>& v_i,
                            const Embedding& v_p) {
  double score = cosine(c.q_vec, v_p);
  if (v_i) score += cosine(*v_i, c.r_vec);
  return score;
}

Selection select_optimal(std::vector<QrCandidate> candidates,
                         const OqrmConfig& cfg,
                         const std::optional<Embedding>& v_i,
                         const Embedding& v_p) {
  if (candidates.empty())
    throw Error(Err::EmptyInput, "select_optimal over no candidates");
  cfg.validate();

  std::vector<Embedding> qs, rs;
  qs.reserve(candidates.size());
  rs.reserve(candidates.size());
  for (const QrCandidate& c : candidates) {
    qs.push_back(c.q_vec);
    rs.push_back(c.r_vec);
  }
  Centroid cq = centroid(qs);
  Centroid cr = centroid(rs);

  Selection sel;
  sel.alpha = cfg.alpha;
  std::size_t best = 0;
  double best_tms = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    QrCandidate& c = candidates[k];
    c.c_int = internal_consistency(c, cq, cr);
    c.c_ext = external_consistency(c, v_i, v_p);
    c.ext_image_term_omitted = !v_i.has_value();
    c.tms = cfg.alpha * *c.c_int + *c.c_ext;
    if (k == 0 || *c.tms > best_tms) {
      best = k;
      best_tms = *c.tms;
    }
  }
  sel.winner_index = best;
  sel.scored = std::move(candidates);
  return sel;
}

}  // namespace cmos
