#include "cmos/backends.hpp"

#include <cstdio>
#include <thread>

#include "cmos/errors.hpp"
#include "cmos/sha256.hpp"

namespace cmos {

void BackendConfig::validate() const {
  if (temperature < 0.0 || temperature > 2.0)
    throw Error(Err::ConfigError, "temperature must be in [0, 2]");
  if (top_p <= 0.0 || top_p > 1.0)
    throw Error(Err::ConfigError, "top_p must be in (0, 1]");
  if (max_retries < 0 || max_retries > 5)
    throw Error(Err::ConfigError, "max_retries must be in [0, 5]");
  if (max_concurrency < 1)
    throw Error(Err::ConfigError, "max_concurrency must be >= 1");
  parse_image_size(image_size);
}

ImageSize parse_image_size(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos) x = s.find('X');
  if (x == std::string::npos)
    throw Error(Err::ConfigError, "image_size must look like 1024x1024, got '" + s + "'");
  try {
    ImageSize out;
    out.width = std::stoi(s.substr(0, x));
    out.height = std::stoi(s.substr(x + 1));
    if (out.width <= 0 || out.height <= 0) throw std::invalid_argument(s);
    return out;
  } catch (const std::exception&) {
    throw Error(Err::ConfigError, "image_size must look like 1024x1024, got '" + s + "'");
  }
}

std::string ChatRequest::joined_text() const {
  std::string out;
  for (const ChatMessage& m : messages) {
    for (const MessagePart& p : m.parts) {
      out += p.kind == MessagePart::Kind::Text ? "t:" : "i:";
      out += p.content;
      out += '\x1e';
    }
  }
  return out;
}

std::size_t ChatRequest::total_size() const {
  std::size_t n = 0;
  for (const ChatMessage& m : messages)
    for (const MessagePart& p : m.parts) n += p.content.size();
  return n;
}

std::string request_fingerprint(const ChatRequest& req) {
  if (!req.tag.empty()) return req.tag;
  return "sha:" + sha256_hex(req.joined_text()).substr(0, 16);
}

void CallLog::append(CallRecord rec) {
  std::lock_guard<std::mutex> lock(mu_);
  if (echo_) {
    std::fprintf(stderr,
                 "call stage=%s instance=%s backend=%s latency_ms=%.2f outcome=%s attempts=%d\n",
                 rec.stage.c_str(), rec.instance_id.c_str(), rec.backend.c_str(),
                 rec.latency_ms, rec.outcome.c_str(), rec.attempts);
  }
  records_.push_back(std::move(rec));
}

std::vector<CallRecord> CallLog::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

std::size_t CallLog::count_stage(const std::string& stage_prefix) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t n = 0;
  for (const CallRecord& r : records_)
    if (r.stage.rfind(stage_prefix, 0) == 0) ++n;
  return n;
}

void CallLog::clear() {
  std::lock_guard<std::mutex> lock(mu_);
  records_.clear();
}

namespace {
thread_local std::vector<std::pair<std::string, std::string>> t_call_scopes;
const std::string kEmpty;
}  // namespace

CallScope::CallScope(std::string stage, std::string instance_id) {
  t_call_scopes.emplace_back(std::move(stage), std::move(instance_id));
}

CallScope::~CallScope() { t_call_scopes.pop_back(); }

const std::string& CallScope::stage() {
  return t_call_scopes.empty() ? kEmpty : t_call_scopes.back().first;
}

const std::string& CallScope::instance() {
  return t_call_scopes.empty() ? kEmpty : t_call_scopes.back().second;
}

void RetryPolicy::sleep_for(std::chrono::milliseconds d) const {
  if (sleeper)
    sleeper(d);
  else
    std::this_thread::sleep_for(d);
}

ChatResponse RetryingChat::chat(const ChatRequest& req) {
  int attempts = 0;
  auto started = std::chrono::steady_clock::now();
  auto log = [&](const std::string& outcome) {
    if (!log_) return;
    double ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - started)
                    .count();
    log_->append({CallScope::stage(), CallScope::instance(), "chat", ms,
                  outcome, attempts});
  };
  try {
    ChatResponse resp = policy_.run([&] { return inner_.chat(req); }, &attempts);
    log("ok");
    return resp;
  } catch (const Error& e) {
    log(err_name(e.code()));
    throw;
  }
}

ConcurrencyGate::ConcurrencyGate(int max_concurrency)
    : sem_(max_concurrency) {
  if (max_concurrency < 1 || max_concurrency > 256)
    throw Error(Err::ConfigError, "max_concurrency must be in [1, 256]");
}

ConcurrencyGate::Guard::Guard(ConcurrencyGate& gate) : gate_(gate) {
  gate_.sem_.acquire();
  std::lock_guard<std::mutex> lock(gate_.mu_);
  ++gate_.in_flight_;
  gate_.high_water_ = std::max(gate_.high_water_, gate_.in_flight_);
}

ConcurrencyGate::Guard::~Guard() {
  {
    std::lock_guard<std::mutex> lock(gate_.mu_);
    --gate_.in_flight_;
  }
  gate_.sem_.release();
}

Embedding CachingTextEncoder::embed_text(const std::string& text) {
  const std::string key = inner_.encoder_id() + "\x1f" + sha256_hex(text);
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  Embedding e = inner_.embed_text(text);
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(key, std::move(e)).first->second;
}

std::size_t CachingTextEncoder::cache_size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.size();
}

Embedding CachingImageEncoder::embed_image(const std::string& image_ref) {
  const std::string key = inner_.encoder_id() + "\x1f" + image_ref;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  Embedding e = inner_.embed_image(image_ref);
  std::lock_guard<std::mutex> lock(mu_);
  return cache_.emplace(key, std::move(e)).first->second;
}

}  // namespace cmos
