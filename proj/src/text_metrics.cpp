#include "cmos/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "cmos/errors.hpp"
#include "cmos/util.hpp"

namespace cmos {

namespace {

using Tokens = std::vector<std::string>;

std::map<std::string, int> ngram_counts(const Tokens& tokens, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) {
      key += tokens[i + k];
      key.push_back('\x1f');
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

double bleu4(const std::string& candidate, std::span<const std::string> references) {
  if (references.empty())
    throw Error(Err::EmptyReference, "bleu4 without references");
  Tokens cand = tokenize(candidate);
  if (cand.empty()) return 0.0;

  std::vector<Tokens> refs;
  refs.reserve(references.size());
  for (const std::string& r : references) refs.push_back(tokenize(r));

  const int n_max = static_cast<int>(std::min<std::size_t>(4, cand.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    auto counts = ngram_counts(cand, n);
    std::map<std::string, int> max_ref;
    for (const Tokens& r : refs) {
      for (const auto& [gram, k] : ngram_counts(r, n))
        max_ref[gram] = std::max(max_ref[gram], k);
    }
    long num = 0;
    long den = 0;
    for (const auto& [gram, k] : counts) {
      den += k;
      auto it = max_ref.find(gram);
      num += std::min<long>(k, it == max_ref.end() ? 0 : it->second);
    }
    double p = (num > 0 ? static_cast<double>(num) : 1e-9) / static_cast<double>(den);
    log_sum += std::log(p) / n_max;
  }

  // Brevity penalty against the closest reference length (ties -> shorter).
  const long c_len = static_cast<long>(cand.size());
  long r_len = static_cast<long>(refs.front().size());
  for (const Tokens& r : refs) {
    long len = static_cast<long>(r.size());
    long best_gap = std::labs(r_len - c_len);
    long gap = std::labs(len - c_len);
    if (gap < best_gap || (gap == best_gap && len < r_len)) r_len = len;
  }
  double bp = c_len > r_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(r_len) / static_cast<double>(c_len));
  return std::clamp(bp * std::exp(log_sum), 0.0, 1.0);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
  Tokens c = tokenize(candidate);
  Tokens r = tokenize(reference);
  if (c.empty() || r.empty()) return 0.0;

  std::vector<std::vector<int>> dp(c.size() + 1, std::vector<int>(r.size() + 1, 0));
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      dp[i + 1][j + 1] = c[i] == r[j] ? dp[i][j] + 1
                                      : std::max(dp[i][j + 1], dp[i + 1][j]);
    }
  }
  int lcs = dp[c.size()][r.size()];
  if (lcs == 0) return 0.0;
  double p = static_cast<double>(lcs) / static_cast<double>(c.size());
  double q = static_cast<double>(lcs) / static_cast<double>(r.size());
  return 2.0 * p * q / (p + q);
}

std::string simple_stem(const std::string& token) {
  static const char* suffixes[] = {"ing", "ly", "es", "ed", "s"};
  if (token.size() > 3) {
    for (const char* suf : suffixes) {
      std::size_t len = std::string(suf).size();
      if (token.size() > len && token.size() - len >= 3 &&
          token.compare(token.size() - len, len, suf) == 0)
        return token.substr(0, token.size() - len);
    }
  }
  return token;
}

double meteor_simplified(const std::string& candidate, const std::string& reference) {
  Tokens c = tokenize(candidate);
  Tokens r = tokenize(reference);
  if (c.empty() || r.empty()) return 0.0;

  std::vector<int> match(c.size(), -1);
  std::vector<bool> used(r.size(), false);
  // Stage 1: exact matches, greedy lowest reference index.
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!used[j] && c[i] == r[j]) {
        match[i] = static_cast<int>(j);
        used[j] = true;
        break;
      }
    }
  }
  // Stage 2: stem matches on the leftovers.
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (match[i] >= 0) continue;
    std::string st = simple_stem(c[i]);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!used[j] && simple_stem(r[j]) == st) {
        match[i] = static_cast<int>(j);
        used[j] = true;
        break;
      }
    }
  }

  int m = 0;
  int chunks = 0;
  int prev_i = -2, prev_j = -2;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (match[i] < 0) continue;
    ++m;
    if (static_cast<int>(i) != prev_i + 1 || match[i] != prev_j + 1) ++chunks;
    prev_i = static_cast<int>(i);
    prev_j = match[i];
  }
  if (m == 0) return 0.0;

  double p = static_cast<double>(m) / static_cast<double>(c.size());
  double q = static_cast<double>(m) / static_cast<double>(r.size());
  double fmean = p * q / (0.9 * p + 0.1 * q);
  double frag = static_cast<double>(chunks) / static_cast<double>(m);
  double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

double distinct_n(std::span<const std::string> corpus, int n) {
  if (corpus.empty()) throw Error(Err::EmptyInput, "distinct_n over empty corpus");
  if (n < 1 || n > 4) throw Error(Err::ConfigError, "distinct_n expects n in 1..4");
  std::set<std::string> unique;
  long total = 0;
  for (const std::string& s : corpus) {
    for (const auto& [gram, k] : ngram_counts(tokenize(s), n)) {
      unique.insert(gram);
      total += k;
    }
  }
  if (total == 0) return 0.0;
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

}  // namespace cmos
