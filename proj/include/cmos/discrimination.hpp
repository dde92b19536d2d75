#pragma once

#include <optional>
#include <string>

#include "cmos/backends.hpp"
#include "cmos/exemplar_store.hpp"
#include "cmos/prompt.hpp"
#include "cmos/records.hpp"

namespace cmos {

// Parses "Reason:/Reasoning: ... Judgment:/Convertible: TRUE|FALSE|Yes|No"
// (case-insensitive; the last judgment marker wins, models sometimes
// restate). Hedged verdicts are a ParseFailure, never a silent FALSE.
Judgment parse_judgment(const std::string& raw);

// Renders a Judgment in the canonical reply format (parse(render(j)) == j).
std::string render_judgment(const Judgment& j);

inline constexpr std::size_t kMaxPromptChars = 100000;

ChatRequest build_discrimination_prompt(const ContentInstance& s,
                                        const Exemplar& ex,
                                        const TemplateSet& templates);

// Retrieves the best exemplar, issues one chat call, parses the reply;
// an unparseable reply is retried once with a stricter format reminder.
struct DiscriminationResult {
  Judgment judgment;
  RetrievalHit retrieved;
  std::string template_version;
};

DiscriminationResult discriminate(const ContentInstance& s,
                                  const ExemplarStore& store,
                                  const QueryEmbeddings& query, ChatModel& chat,
                                  const TemplateSet& templates);

// Builds an exemplar from a raw record via the construction prompt.
Exemplar construct_exemplar(const ContentInstance& s,
                            const std::optional<std::string>& original_question,
                            ChatModel& chat, const TemplateSet& templates);

}  // namespace cmos
