#include "cmos/http_backends.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "cmos/errors.hpp"
#include "cmos/sha256.hpp"
#include "cmos/util.hpp"

namespace cmos {

using nlohmann::json;

HttpEnv HttpEnv::from_environment() {
  HttpEnv env;
  if (const char* key = std::getenv("CMOS_API_KEY")) env.api_key = key;
  if (const char* base = std::getenv("CMOS_API_BASE")) env.api_base = base;
  return env;
}

namespace {

std::string base64_encode(const std::string& data) {
  static const char* table =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                 (static_cast<unsigned char>(data[i + 1]) << 8) |
                 static_cast<unsigned char>(data[i + 2]);
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(table[(v >> 6) & 63]);
    out.push_back(table[v & 63]);
  }
  if (i < data.size()) {
    unsigned v = static_cast<unsigned char>(data[i]) << 16;
    bool two = i + 1 < data.size();
    if (two) v |= static_cast<unsigned char>(data[i + 1]) << 8;
    out.push_back(table[(v >> 18) & 63]);
    out.push_back(table[(v >> 12) & 63]);
    out.push_back(two ? table[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(const std::string& data) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string out;
  int buf = 0, bits = 0;
  for (char c : data) {
    int v = value(c);
    if (v < 0) continue;
    buf = (buf << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((buf >> bits) & 0xff));
    }
  }
  return out;
}

struct Endpoint {
  std::string host_port;  // scheme://host:port
  std::string path_prefix;
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme = url.find("://");
  std::size_t path_start = scheme == std::string::npos
                               ? url.find('/')
                               : url.find('/', scheme + 3);
  if (path_start == std::string::npos) return {url, ""};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string resolve_base(const BackendConfig& config, const HttpEnv& env) {
  if (!config.endpoint.empty()) return config.endpoint;
  if (!env.api_base.empty()) return env.api_base;
  throw Error(Err::ConfigError,
              "http backend needs an endpoint (config or CMOS_API_BASE)");
}

// One POST with error mapping: connect failures and 5xx/429 are transient,
// other 4xx are semantic.
std::string post_json(const BackendConfig& config, const HttpEnv& env,
                      const std::string& path, const std::string& body) {
  Endpoint ep = split_endpoint(resolve_base(config, env));
  httplib::Client client(ep.host_port);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
                                    config.timeout)
                                    .count(),
                                0);
  client.set_read_timeout(
      std::chrono::duration_cast<std::chrono::seconds>(config.timeout).count(), 0);
  httplib::Headers headers;
  if (!env.api_key.empty())
    headers.emplace("Authorization", "Bearer " + env.api_key);

  auto res = client.Post((ep.path_prefix + path).c_str(), headers, body,
                         "application/json");
  if (!res)
    throw Error(Err::BackendUnavailable,
                "no response from " + ep.host_port + path);
  if (res->status == 429)
    throw Error(Err::RateLimited, "429 from " + path);
  if (res->status >= 500)
    throw Error(Err::BackendUnavailable,
                std::to_string(res->status) + " from " + path);
  if (res->status >= 400) {
    // Provider safety refusals surface their message.
    try {
      json j = json::parse(res->body);
      std::string msg = j.at("error").at("message").get<std::string>();
      if (to_lower(msg).find("safety") != std::string::npos ||
          to_lower(msg).find("content policy") != std::string::npos)
        throw Error(Err::ContentRejected, msg);
      throw Error(Err::MalformedResponse,
                  std::to_string(res->status) + ": " + msg);
    } catch (const json::exception&) {
      throw Error(Err::MalformedResponse,
                  std::to_string(res->status) + " from " + path);
    }
  }
  return res->body;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

// ---------------------------------------------------------------------------
// chat
// ---------------------------------------------------------------------------

HttpChatModel::HttpChatModel(BackendConfig config, HttpEnv env, CallLog* log)
    : config_(std::move(config)), env_(std::move(env)), log_(log),
      gate_(config_.max_concurrency) {
  config_.validate();
  policy_.max_retries = config_.max_retries;
}

std::string HttpChatModel::build_body(const ChatRequest& req,
                                      const BackendConfig& config) {
  json messages = json::array();
  for (const ChatMessage& m : req.messages) {
    json parts = json::array();
    for (const MessagePart& p : m.parts) {
      if (p.kind == MessagePart::Kind::Text) {
        parts.push_back({{"type", "text"}, {"text", p.content}});
      } else {
        std::string url = p.content;
        if (std::filesystem::exists(p.content)) {
          url = "data:image/pgm;base64," +
                base64_encode(read_text_file(p.content));
        }
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
      }
    }
    messages.push_back({{"role", m.role}, {"content", std::move(parts)}});
  }
  json body{{"model", config.model_name},
            {"messages", std::move(messages)},
            {"temperature", config.temperature},
            {"top_p", config.top_p}};
  if (config.seed) body["seed"] = *config.seed;
  return body.dump();
}

std::string HttpChatModel::parse_reply(const std::string& body) {
  try {
    json j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Err::MalformedResponse,
                std::string("chat reply did not parse: ") + e.what());
  }
}

ChatResponse HttpChatModel::chat(const ChatRequest& req) {
  if (req.messages.empty())
    throw Error(Err::EmptyInput, "chat request without messages");
  ConcurrencyGate::Guard guard(gate_);
  auto start = std::chrono::steady_clock::now();
  int attempts = 0;
  try {
    std::string body = build_body(req, config_);
    std::string reply_body = policy_.run(
        [&] { return post_json(config_, env_, "/v1/chat/completions", body); },
        &attempts);
    ChatResponse resp{parse_reply(reply_body), reply_body};
    if (log_)
      log_->append({CallScope::stage(), CallScope::instance(), "chat",
                    elapsed_ms(start), "ok", attempts});
    return resp;
  } catch (const Error& e) {
    if (log_)
      log_->append({CallScope::stage(), CallScope::instance(), "chat",
                    elapsed_ms(start), err_name(e.code()), attempts});
    throw;
  }
}

// ---------------------------------------------------------------------------
// encoders
// ---------------------------------------------------------------------------

HttpTextEncoder::HttpTextEncoder(BackendConfig config, std::size_t dim,
                                 std::string space, HttpEnv env, CallLog* log)
    : config_(std::move(config)), dim_(dim), space_(std::move(space)),
      env_(std::move(env)), log_(log), gate_(config_.max_concurrency) {
  config_.validate();
  policy_.max_retries = config_.max_retries;
}

std::string HttpTextEncoder::encoder_id() const {
  return config_.model_name + "@" + space_;
}

std::string HttpTextEncoder::build_body(const std::string& input,
                                        const BackendConfig& config) {
  return json{{"model", config.model_name}, {"input", json::array({input})}}.dump();
}

std::vector<double> HttpTextEncoder::parse_reply(const std::string& body) {
  try {
    json j = json::parse(body);
    return j.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(Err::MalformedResponse,
                std::string("embedding reply did not parse: ") + e.what());
  }
}

Embedding HttpTextEncoder::embed_text(const std::string& text) {
  if (text.empty()) throw Error(Err::EmptyInput, "embed_text of empty string");
  ConcurrencyGate::Guard guard(gate_);
  auto start = std::chrono::steady_clock::now();
  int attempts = 0;
  try {
    std::string reply = policy_.run(
        [&] {
          return post_json(config_, env_, "/v1/embeddings",
                           build_body(text, config_));
        },
        &attempts);
    Embedding e{parse_reply(reply), encoder_id()};
    if (e.dim() != dim_ || !e.all_finite())
      throw Error(Err::MalformedResponse, "embedding dim/finiteness mismatch");
    if (log_)
      log_->append({CallScope::stage(), CallScope::instance(), "encoder-text",
                    elapsed_ms(start), "ok", attempts});
    return e;
  } catch (const Error& e) {
    if (log_)
      log_->append({CallScope::stage(), CallScope::instance(), "encoder-text",
                    elapsed_ms(start), err_name(e.code()), attempts});
    throw;
  }
}

HttpImageEncoder::HttpImageEncoder(BackendConfig config, std::size_t dim,
                                   std::string space, HttpEnv env, CallLog* log)
    : config_(std::move(config)), dim_(dim), space_(std::move(space)),
      env_(std::move(env)), log_(log), gate_(config_.max_concurrency) {
  config_.validate();
  policy_.max_retries = config_.max_retries;
}

std::string HttpImageEncoder::encoder_id() const {
  return config_.model_name + "+img@" + space_;
}

Embedding HttpImageEncoder::embed_image(const std::string& image_ref) {
  if (!std::filesystem::exists(image_ref))
    throw Error(Err::ImageDecodeError, "image not found: " + image_ref);
  ConcurrencyGate::Guard guard(gate_);
  auto start = std::chrono::steady_clock::now();
  int attempts = 0;
  try {
    json body{{"model", config_.model_name},
              {"input", json::array({json{
                            {"image", base64_encode(read_text_file(image_ref))}}})}};
    std::string reply = policy_.run(
        [&] {
          return post_json(config_, env_, "/v1/embeddings", body.dump());
        },
        &attempts);
    Embedding e{HttpTextEncoder::parse_reply(reply), encoder_id()};
    if (e.dim() != dim_ || !e.all_finite())
      throw Error(Err::MalformedResponse, "embedding dim/finiteness mismatch");
    if (log_)
      log_->append({CallScope::stage(), CallScope::instance(), "encoder-image",
                    elapsed_ms(start), "ok", attempts});
    return e;
  } catch (const Error& e) {
    if (log_)
      log_->append({CallScope::stage(), CallScope::instance(), "encoder-image",
                    elapsed_ms(start), err_name(e.code()), attempts});
    throw;
  }
}

// ---------------------------------------------------------------------------
// image generation
// ---------------------------------------------------------------------------

HttpImageGenerator::HttpImageGenerator(BackendConfig config,
                                       std::filesystem::path out_dir,
                                       HttpEnv env, CallLog* log)
    : config_(std::move(config)), out_dir_(std::move(out_dir)),
      env_(std::move(env)), log_(log), gate_(config_.max_concurrency) {
  config_.validate();
  policy_.max_retries = config_.max_retries;
}

std::string HttpImageGenerator::build_body(
    const std::string& prompt, const std::optional<std::string>& template_ref,
    std::optional<long long> seed, const BackendConfig& config) {
  json body{{"model", config.model_name},
            {"prompt", prompt},
            {"size", config.image_size},
            {"response_format", "b64_json"}};
  if (seed) body["seed"] = *seed;
  if (template_ref && std::filesystem::exists(*template_ref))
    body["image"] = base64_encode(read_text_file(*template_ref));
  return body.dump();
}

std::string HttpImageGenerator::generate_image(
    const std::string& prompt, const std::optional<std::string>& template_ref,
    std::optional<long long> seed) {
  if (prompt.empty())
    throw Error(Err::EmptyInput, "generate_image with empty prompt");
  ConcurrencyGate::Guard guard(gate_);
  auto start = std::chrono::steady_clock::now();
  int attempts = 0;
  try {
    std::string body = build_body(prompt, template_ref, seed, config_);
    std::string reply = policy_.run(
        [&] { return post_json(config_, env_, "/v1/images/generations", body); },
        &attempts);
    std::string data;
    try {
      json j = json::parse(reply);
      data = base64_decode(j.at("data").at(0).at("b64_json").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(Err::MalformedResponse,
                  std::string("image reply did not parse: ") + e.what());
    }
    std::filesystem::create_directories(out_dir_);
    std::filesystem::path out =
        out_dir_ / ("img_" + sha256_hex(body).substr(0, 16) + ".pgm");
    write_text_file(out, data);
    if (log_)
      log_->append({CallScope::stage(), CallScope::instance(), "t2i",
                    elapsed_ms(start), "ok", attempts});
    return out.string();
  } catch (const Error& e) {
    if (log_)
      log_->append({CallScope::stage(), CallScope::instance(), "t2i",
                    elapsed_ms(start), err_name(e.code()), attempts});
    throw;
  }
}

}  // namespace cmos
