#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmos/embedding.hpp"
#include "cmos/errors.hpp"

namespace cmos {

struct BackendConfig {
  std::string endpoint;
  std::string model_name;
  double temperature = 0.7;
  double top_p = 0.8;
  std::string image_size = "1024x1024";
  std::optional<long long> seed = 42;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  int max_concurrency = 4;

  void validate() const;  // throws Error(ConfigError)
};

struct ImageSize {
  int width = 0;
  int height = 0;
};
ImageSize parse_image_size(const std::string& s);  // "1024x1024"

// ---------------------------------------------------------------------------
// Chat message model (chat-completions shaped; providers map it in adapters)
// ---------------------------------------------------------------------------

struct MessagePart {
  enum class Kind { Text, ImageRef };
  Kind kind = Kind::Text;
  std::string content;  // text, or an image path/URL
};

struct ChatMessage {
  std::string role;  // "user" | "assistant" | "system"
  std::vector<MessagePart> parts;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  // Stable fingerprint key for scripting/caching; falls back to a content
  // hash when empty. The pipeline sets "<stage>:<instance>[:...]".
  std::string tag;

  std::string joined_text() const;
  std::size_t total_size() const;
};

struct ChatResponse {
  std::string text;
  std::string raw;  // opaque provider payload (mock backends echo the text)
};

std::string request_fingerprint(const ChatRequest& req);

// ---------------------------------------------------------------------------
// Call logging. Stages mark themselves via a thread-local scope; backends
// append one record per logical call.
// ---------------------------------------------------------------------------

struct CallRecord {
  std::string stage;
  std::string instance_id;
  std::string backend;  // "encoder-text" | "encoder-image" | "chat" | "t2i"
  double latency_ms = 0.0;
  std::string outcome;  // "ok" or the error name
  int attempts = 1;
};

class CallLog {
 public:
  void append(CallRecord rec);
  std::vector<CallRecord> snapshot() const;
  std::size_t count_stage(const std::string& stage_prefix) const;
  void clear();
  void set_echo(bool on) { echo_ = on; }  // mirror each record to stderr

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
  bool echo_ = false;
};

// RAII stage marker consumed by backend logging.
class CallScope {
 public:
  CallScope(std::string stage, std::string instance_id);
  ~CallScope();
  static const std::string& stage();
  static const std::string& instance();
};

// ---------------------------------------------------------------------------
// Backend interfaces
// ---------------------------------------------------------------------------

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual Embedding embed_text(const std::string& text) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string encoder_id() const = 0;
};

class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual Embedding embed_image(const std::string& image_ref) = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string encoder_id() const = 0;
};

class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual ChatResponse chat(const ChatRequest& req) = 0;
};

class ImageGenerator {
 public:
  virtual ~ImageGenerator() = default;
  // Returns a reference (path) to a decodable image of the configured size.
  virtual std::string generate_image(const std::string& prompt,
                                     const std::optional<std::string>& template_ref,
                                     std::optional<long long> seed) = 0;
};

// ---------------------------------------------------------------------------
// Retry with exponential backoff. Only transient errors
// (BackendUnavailable / RateLimited) are retried.
// ---------------------------------------------------------------------------

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds base_delay{200};
  // Injectable so tests never sleep for real.
  std::function<void(std::chrono::milliseconds)> sleeper;

  // Runs f, retrying transient failures. Reports total attempts made via
  // attempts_out when non-null.
  template <typename F>
  auto run(F&& f, int* attempts_out = nullptr) const -> decltype(f());

  void sleep_for(std::chrono::milliseconds d) const;
};

// Decorator adding retry behavior to any chat backend.
class RetryingChat : public ChatModel {
 public:
  RetryingChat(ChatModel& inner, RetryPolicy policy, CallLog* log = nullptr)
      : inner_(inner), policy_(policy), log_(log) {}
  ChatResponse chat(const ChatRequest& req) override;

 private:
  ChatModel& inner_;
  RetryPolicy policy_;
  CallLog* log_;
};

// ---------------------------------------------------------------------------
// Concurrency cap shared by backend handles.
// ---------------------------------------------------------------------------

class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int max_concurrency);

  class Guard {
   public:
    explicit Guard(ConcurrencyGate& gate);
    ~Guard();
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    ConcurrencyGate& gate_;
  };

  int high_water() const { return high_water_; }

 private:
  std::counting_semaphore<256> sem_;
  std::mutex mu_;
  int in_flight_ = 0;
  int high_water_ = 0;
};

// ---------------------------------------------------------------------------
// Write-once embedding cache keyed by (encoder_id, content hash).
// ---------------------------------------------------------------------------

class CachingTextEncoder : public TextEncoder {
 public:
  explicit CachingTextEncoder(TextEncoder& inner) : inner_(inner) {}
  Embedding embed_text(const std::string& text) override;
  std::size_t dim() const override { return inner_.dim(); }
  std::string encoder_id() const override { return inner_.encoder_id(); }
  std::size_t cache_size() const;

 private:
  TextEncoder& inner_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Embedding> cache_;
};

class CachingImageEncoder : public ImageEncoder {
 public:
  explicit CachingImageEncoder(ImageEncoder& inner) : inner_(inner) {}
  Embedding embed_image(const std::string& image_ref) override;
  std::size_t dim() const override { return inner_.dim(); }
  std::string encoder_id() const override { return inner_.encoder_id(); }

 private:
  ImageEncoder& inner_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Embedding> cache_;
};

// --- template implementation ---

template <typename F>
auto RetryPolicy::run(F&& f, int* attempts_out) const -> decltype(f()) {
  int attempt = 0;
  for (;;) {
    ++attempt;
    try {
      auto result = f();
      if (attempts_out) *attempts_out = attempt;
      return result;
    } catch (const Error& e) {
      if (!e.transient() || attempt > max_retries) {
        if (attempts_out) *attempts_out = attempt;
        throw;
      }
      auto delay = base_delay * (1 << (attempt - 1));
      sleep_for(delay);
    }
  }
}

}  // namespace cmos
