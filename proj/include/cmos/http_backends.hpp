#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "cmos/backends.hpp"

namespace cmos {

// Remote-API clients speaking chat-completions-style JSON over HTTP(S).
// Credentials come from CMOS_API_KEY / CMOS_API_BASE unless the config
// names an endpoint. Transient failures (connect errors, 5xx, 429) are
// retried with exponential backoff up to config.max_retries; 4xx-class
// semantic errors are never retried.

struct HttpEnv {
  std::string api_key;
  std::string api_base;
  static HttpEnv from_environment();
};

class HttpChatModel : public ChatModel {
 public:
  HttpChatModel(BackendConfig config, HttpEnv env = HttpEnv::from_environment(),
                CallLog* log = nullptr);
  ChatResponse chat(const ChatRequest& req) override;

  // Request body builder, exposed for wire-format tests.
  static std::string build_body(const ChatRequest& req, const BackendConfig& config);
  static std::string parse_reply(const std::string& body);

 private:
  BackendConfig config_;
  HttpEnv env_;
  CallLog* log_;
  ConcurrencyGate gate_;
  RetryPolicy policy_;
};

class HttpTextEncoder : public TextEncoder {
 public:
  HttpTextEncoder(BackendConfig config, std::size_t dim, std::string space,
                  HttpEnv env = HttpEnv::from_environment(), CallLog* log = nullptr);
  Embedding embed_text(const std::string& text) override;
  std::size_t dim() const override { return dim_; }
  std::string encoder_id() const override;

  static std::string build_body(const std::string& input, const BackendConfig& config);
  static std::vector<double> parse_reply(const std::string& body);

 private:
  BackendConfig config_;
  std::size_t dim_;
  std::string space_;
  HttpEnv env_;
  CallLog* log_;
  ConcurrencyGate gate_;
  RetryPolicy policy_;
};

class HttpImageEncoder : public ImageEncoder {
 public:
  HttpImageEncoder(BackendConfig config, std::size_t dim, std::string space,
                   HttpEnv env = HttpEnv::from_environment(), CallLog* log = nullptr);
  Embedding embed_image(const std::string& image_ref) override;
  std::size_t dim() const override { return dim_; }
  std::string encoder_id() const override;

 private:
  BackendConfig config_;
  std::size_t dim_;
  std::string space_;
  HttpEnv env_;
  CallLog* log_;
  ConcurrencyGate gate_;
  RetryPolicy policy_;
};

class HttpImageGenerator : public ImageGenerator {
 public:
  HttpImageGenerator(BackendConfig config, std::filesystem::path out_dir,
                     HttpEnv env = HttpEnv::from_environment(), CallLog* log = nullptr);
  std::string generate_image(const std::string& prompt,
                             const std::optional<std::string>& template_ref,
                             std::optional<long long> seed) override;

  static std::string build_body(const std::string& prompt,
                                const std::optional<std::string>& template_ref,
                                std::optional<long long> seed,
                                const BackendConfig& config);

 private:
  BackendConfig config_;
  std::filesystem::path out_dir_;
  HttpEnv env_;
  CallLog* log_;
  ConcurrencyGate gate_;
  RetryPolicy policy_;
};

}  // namespace cmos
