#include "cmos/mock_backends.hpp"

#include <atomic>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "cmos/errors.hpp"
#include "cmos/image.hpp"
#include "cmos/kernels.hpp"
#include "cmos/util.hpp"

namespace cmos {

namespace {

class Timer {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void log_call(CallLog* log, const char* backend, const Timer& t,
              const std::string& outcome) {
  if (!log) return;
  log->append({CallScope::stage(), CallScope::instance(), backend, t.ms(),
               outcome, 1});
}

void normalize_unit(std::vector<double>& v) {
  double n = std::sqrt(kern::sumsq(v.data(), v.size()));
  if (n == 0.0) {
    v[0] = 1.0;  // degenerate input; pick a fixed direction
    return;
  }
  kern::scale_inplace(v.data(), 1.0 / n, v.size());
}

// First value following `marker` on any line of `text`.
std::optional<std::string> find_field(const std::string& text,
                                      const std::string& marker) {
  std::size_t pos = text.find(marker);
  if (pos == std::string::npos) return std::nullopt;
  pos += marker.size();
  std::size_t end = text.find('\n', pos);
  if (end == std::string::npos) end = text.size();
  std::string value = trim(text.substr(pos, end - pos));
  if (value.empty()) return std::nullopt;
  return value;
}

}  // namespace

std::string MockTextEncoder::encoder_id() const {
  return "mock-text@clipsim" + std::to_string(dim_);
}

Embedding MockTextEncoder::embed_text(const std::string& text) {
  ConcurrencyGate::Guard guard(gate_);
  Timer t;
  if (text.empty()) {
    log_call(log_, "encoder-text", t, err_name(Err::EmptyInput));
    throw Error(Err::EmptyInput, "embed_text of empty string");
  }
  std::vector<double> acc(dim_, 0.0);
  for (const std::string& token : tokenize(text)) {
    std::uint64_t state = fnv1a64(token, seed_);
    for (std::size_t d = 0; d < dim_; ++d)
      acc[d] += uniform01(state) * 2.0 - 1.0;
  }
  normalize_unit(acc);
  log_call(log_, "encoder-text", t, "ok");
  return Embedding{std::move(acc), encoder_id()};
}

std::string MockImageEncoder::encoder_id() const {
  return "mock-image@clipsim" + std::to_string(dim_);
}

Embedding MockImageEncoder::embed_image(const std::string& image_ref) {
  ConcurrencyGate::Guard guard(gate_);
  Timer t;
  GrayImage img;
  try {
    img = load_pgm(image_ref);
  } catch (const Error& e) {
    log_call(log_, "encoder-image", t, err_name(e.code()));
    throw;
  }
  std::vector<double> cells = downsample_grid(img, grid_);
  std::vector<double> values(dim_, 0.0);
  for (std::size_t i = 0; i < cells.size() && i < dim_; ++i)
    values[i] = cells[i] / 255.0 * 2.0 - 1.0;
  normalize_unit(values);
  log_call(log_, "encoder-image", t, "ok");
  return Embedding{std::move(values), encoder_id()};
}

void MockChatModel::add_script(const std::string& fingerprint,
                               const std::string& reply) {
  script_[fingerprint] = reply;
}

void MockChatModel::load_script_file(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  for (auto& [key, value] : j.at("responses").items())
    script_[key] = value.get<std::string>();
}

ChatResponse MockChatModel::chat(const ChatRequest& req) {
  ConcurrencyGate::Guard guard(gate_);
  Timer t;
  if (req.messages.empty()) {
    log_call(log_, "chat", t, err_name(Err::EmptyInput));
    throw Error(Err::EmptyInput, "chat request without messages");
  }
  const std::string fp = request_fingerprint(req);
  if (mode_ != Mode::Procedural) {
    if (auto it = script_.find(fp); it != script_.end()) {
      log_call(log_, "chat", t, "ok");
      return {it->second, it->second};
    }
    if (mode_ == Mode::Scripted) {
      log_call(log_, "chat", t, err_name(Err::MalformedResponse));
      throw Error(Err::MalformedResponse,
                  "no scripted reply for fingerprint '" + fp + "'");
    }
  }
  std::string reply = procedural_reply(req);
  log_call(log_, "chat", t, "ok");
  return {reply, reply};
}

std::string MockChatModel::procedural_reply(const ChatRequest& req) const {
  const std::string text = req.joined_text();
  const std::string fp = request_fingerprint(req);
  const std::uint64_t h = fnv1a64(fp);

  if (text.find("calculate the similarity") != std::string::npos) {
    // Evaluator: deterministic score in [0.55, 1.00].
    double score = 0.55 + static_cast<double>((h >> 8) % 46) / 100.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "Score: %.2f\n", score);
    return std::string(buf) +
           "Suggestions: sharpen the main subject and raise the contrast "
           "against the background";
  }

  if (text.find("generate multiple options") != std::string::npos) {
    std::string answer = find_field(text, "Answer:").value_or("the answer");
    int t_opts = 4;
    if (auto n = find_field(text, "Generate exactly ")) {
      try { t_opts = std::stoi(*n); } catch (const std::exception&) {}
    }
    std::size_t answer_pos = h % static_cast<std::uint64_t>(t_opts);
    std::string out;
    for (int i = 0; i < t_opts; ++i) {
      std::string label(1, static_cast<char>('a' + i));
      std::string body =
          static_cast<std::size_t>(i) == answer_pos
              ? answer
              : "a plausible alternative " + std::to_string(i + 1) + " to " + answer;
      out += "Option (" + label + "): " + body +
             " | Description: a clear photo of " + body + " on a plain background\n";
    }
    return out;
  }

  if (text.find("Generate a new question") != std::string::npos) {
    std::string answer = find_field(text, "Answer:").value_or("the subject");
    static const char* q_forms[] = {
        "Which image shows %s?",
        "Which of the following pictures depicts %s?",
        "Which option best illustrates %s?",
    };
    static const char* r_forms[] = {
        "The answer %s names a concrete entity with a distinctive appearance.",
        "Because %s can be rendered as a recognizable picture, image options work here.",
        "A learner can identify %s visually, so the question suits visual options.",
    };
    char q[512], r[512];
    std::snprintf(q, sizeof(q), q_forms[h % 3], answer.c_str());
    std::snprintf(r, sizeof(r), r_forms[(h >> 16) % 3], answer.c_str());
    return "Question: " + std::string(q) + "\nReason: " + std::string(r);
  }

  if (text.find("can be converted into a question format") != std::string::npos) {
    bool convertible = (h % 4) != 0;
    if (convertible)
      return "Reason: The content names concrete entities that can be shown "
             "as distinct pictures.\nJudgment: TRUE";
    return "Reason: The content hinges on abstract relations with no stable "
           "visual form.\nJudgment: FALSE";
  }

  if (text.find("can be transformed into a multiple-choice question") !=
      std::string::npos) {
    bool convertible = (h % 4) != 0;
    if (convertible)
      return "Reasoning: The answer is a depictable object and the context "
             "supplies visual anchors.\nConvertible: TRUE";
    return "Reasoning: Neither the answer nor the key entities have a "
           "canonical visual rendering.\nConvertible: FALSE";
  }

  if (text.find("one short caption") != std::string::npos) {
    return "Caption: a study illustration with smooth gray shading (" +
           hex64(h, 8) + ")";
  }

  throw Error(Err::MalformedResponse,
              "procedural mock cannot infer the task for fingerprint '" + fp + "'");
}

std::string MockImageGenerator::generate_image(
    const std::string& prompt, const std::optional<std::string>& template_ref,
    std::optional<long long> seed) {
  ConcurrencyGate::Guard guard(gate_);
  Timer t;
  if (prompt.empty()) {
    log_call(log_, "t2i", t, err_name(Err::EmptyInput));
    throw Error(Err::EmptyInput, "generate_image with empty prompt");
  }
  std::uint64_t h = fnv1a64(prompt, 0x7a31u);
  if (template_ref) h ^= fnv1a64(*template_ref, 0x11u);
  if (seed) h ^= 0x5851f42d4c957f2dull * static_cast<std::uint64_t>(*seed + 1);

  ImageSize size = parse_image_size(image_size_);
  GrayImage img = procedural_image(h, size.width, size.height);
  if (template_ref) {
    try {
      GrayImage tpl = resize_bicubic(load_pgm(*template_ref), size.width, size.height);
      img = blend(img, tpl);
    } catch (const Error& e) {
      log_call(log_, "t2i", t, err_name(e.code()));
      throw;
    }
  }
  std::filesystem::path out = out_dir_ / ("img_" + hex64(h) + ".pgm");
  if (!std::filesystem::exists(out)) {
    // temp + rename keeps concurrent writers of the same content safe
    static std::atomic<unsigned> counter{0};
    std::filesystem::path tmp =
        out_dir_ / ("tmp_" + hex64(h) + "_" + std::to_string(counter.fetch_add(1)));
    save_pgm(img, tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, out, ec);
    if (ec) std::filesystem::remove(tmp);
  }
  log_call(log_, "t2i", t, "ok");
  return out.string();
}

ChatResponse FaultInjectingChat::chat(const ChatRequest& req) {
  const std::string fp = request_fingerprint(req);
  int prior;
  {
    std::lock_guard<std::mutex> lock(mu_);
    prior = calls_[fp]++;
  }
  if (auto code = rule_(req, prior))
    throw Error(*code, "injected fault for '" + fp + "'");
  return inner_.chat(req);
}

}  // namespace cmos
