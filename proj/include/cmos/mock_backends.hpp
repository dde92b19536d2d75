#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "cmos/backends.hpp"

namespace cmos {

// All mock backends are pure functions of their inputs plus seed, so full
// pipeline runs under mocks are bit-reproducible.

// Seeded hash of the token multiset, expanded to a fixed-dim unit vector.
// Similar token multisets land near each other; distinct ones do not collide.
class MockTextEncoder : public TextEncoder {
 public:
  explicit MockTextEncoder(std::size_t dim = 64, std::uint64_t seed = 42,
                           CallLog* log = nullptr)
      : dim_(dim), seed_(seed), log_(log), gate_(8) {}

  Embedding embed_text(const std::string& text) override;
  std::size_t dim() const override { return dim_; }
  std::string encoder_id() const override;
  ConcurrencyGate& gate() { return gate_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
  CallLog* log_;
  ConcurrencyGate gate_;
};

// Downsampled grayscale pixel grid, centered to [-1, 1], zero-padded to the
// shared dim, unit-normalized. Shares the embedding space of the text mock.
class MockImageEncoder : public ImageEncoder {
 public:
  explicit MockImageEncoder(std::size_t dim = 64, int grid = 8,
                            CallLog* log = nullptr)
      : dim_(dim), grid_(grid), log_(log), gate_(8) {}

  Embedding embed_image(const std::string& image_ref) override;
  std::size_t dim() const override { return dim_; }
  std::string encoder_id() const override;

 private:
  std::size_t dim_;
  int grid_;
  CallLog* log_;
  ConcurrencyGate gate_;
};

// Scripted and/or procedural chat stand-in.
//  - Scripted:       fingerprint must be present in the script, else a
//                    MalformedResponse naming it.
//  - Procedural:     derives a deterministic reply from the request.
//  - ScriptedWithFallback: script first, procedural for the rest.
class MockChatModel : public ChatModel {
 public:
  enum class Mode { Procedural, Scripted, ScriptedWithFallback };

  explicit MockChatModel(Mode mode = Mode::Procedural, CallLog* log = nullptr,
                         int max_concurrency = 8)
      : mode_(mode), log_(log), gate_(max_concurrency) {}

  ChatResponse chat(const ChatRequest& req) override;

  void add_script(const std::string& fingerprint, const std::string& reply);
  // JSON file: {"responses": {"<fingerprint>": "reply", ...}}
  void load_script_file(const std::filesystem::path& path);
  ConcurrencyGate& gate() { return gate_; }

 private:
  std::string procedural_reply(const ChatRequest& req) const;

  Mode mode_;
  CallLog* log_;
  ConcurrencyGate gate_;
  std::map<std::string, std::string> script_;
};

// Renders a deterministic procedural image from hash(prompt, template, seed);
// template conditioning blends the reference image in at 50%.
class MockImageGenerator : public ImageGenerator {
 public:
  MockImageGenerator(std::filesystem::path out_dir, std::string image_size = "1024x1024",
                     CallLog* log = nullptr, int max_concurrency = 8)
      : out_dir_(std::move(out_dir)), image_size_(std::move(image_size)),
        log_(log), gate_(max_concurrency) {}

  std::string generate_image(const std::string& prompt,
                             const std::optional<std::string>& template_ref,
                             std::optional<long long> seed) override;

 private:
  std::filesystem::path out_dir_;
  std::string image_size_;
  CallLog* log_;
  ConcurrencyGate gate_;
};

// Wraps a chat backend and injects failures per the rule; the rule sees the
// request and how many times this fingerprint has been attempted before.
class FaultInjectingChat : public ChatModel {
 public:
  using Rule = std::function<std::optional<Err>(const ChatRequest&, int prior_calls)>;

  FaultInjectingChat(ChatModel& inner, Rule rule)
      : inner_(inner), rule_(std::move(rule)) {}

  ChatResponse chat(const ChatRequest& req) override;

 private:
  ChatModel& inner_;
  Rule rule_;
  std::mutex mu_;
  std::map<std::string, int> calls_;
};

}  // namespace cmos
