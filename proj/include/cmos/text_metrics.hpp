#pragma once

#include <span>
#include <string>

namespace cmos {

// Text-overlap metrics over the shared tokenizer (cmos::tokenize). All
// return values in [0, 1].

// Sentence BLEU with uniform weights over orders 1..min(4, candidate
// length), clipped modified precision, epsilon 1e-9 on zero numerators, and
// the standard brevity penalty (closest reference length, ties to shorter).
double bleu4(const std::string& candidate, std::span<const std::string> references);

// LCS-based F1.
double rouge_l(const std::string& candidate, const std::string& reference);

// Exact + stem unigram matching with the canonical (0.9, 3.0, 0.5)
// parameters and a plain suffix-stripping stemmer; no synonym tables, which
// is why it is reported as "meteor_simplified" everywhere.
double meteor_simplified(const std::string& candidate, const std::string& reference);

// Corpus-level unique-n-gram ratio, n in 1..4.
double distinct_n(std::span<const std::string> corpus, int n);

// The stemmer used by meteor_simplified, exposed for tests.
std::string simple_stem(const std::string& token);

}  // namespace cmos
