#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cmos/embedding.hpp"
#include "cmos/errors.hpp"
#include "cmos/http_backends.hpp"
#include "cmos/image.hpp"
#include "cmos/mock_backends.hpp"
#include "cmos/util.hpp"

using namespace cmos;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("cmos_backends_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ChatRequest simple_request(const std::string& text, const std::string& tag = "") {
  ChatRequest req;
  req.messages.push_back({"user", {{MessagePart::Kind::Text, text}}});
  req.tag = tag;
  return req;
}

}  // namespace

TEST_CASE("config validation") {
  BackendConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.temperature = 2.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.temperature = 0.7;
  cfg.top_p = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.top_p = 0.8;
  cfg.max_retries = 6;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.max_retries = 2;
  cfg.max_concurrency = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.max_concurrency = 1;
  cfg.image_size = "big";
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.image_size = "512x256";
  CHECK_NOTHROW(cfg.validate());
  ImageSize s = parse_image_size(cfg.image_size);
  CHECK(s.width == 512);
  CHECK(s.height == 256);
}

TEST_CASE("mock text encoder is deterministic and separates strings") {
  MockTextEncoder enc(64, 42);
  Embedding a1 = enc.embed_text("abc");
  Embedding a2 = enc.embed_text("abc");
  CHECK(a1.values == a2.values);
  CHECK(a1.encoder_id == "mock-text@clipsim64");
  CHECK(norm2(a1) == doctest::Approx(1.0).epsilon(1e-12));

  Embedding b = enc.embed_text("entirely different words");
  CHECK(cosine(a1, b) < 1.0);

  CHECK_THROWS_AS(enc.embed_text(""), Error);
}

TEST_CASE("mock image encoder embeds pixels into the shared space") {
  fs::path dir = temp_dir("imgenc");
  save_pgm(GrayImage::filled(8, 8, 0), dir / "black.pgm");
  save_pgm(GrayImage::filled(8, 8, 255), dir / "white.pgm");

  MockImageEncoder enc(64);
  Embedding black1 = enc.embed_image((dir / "black.pgm").string());
  Embedding black2 = enc.embed_image((dir / "black.pgm").string());
  CHECK(black1.values == black2.values);
  Embedding white = enc.embed_image((dir / "white.pgm").string());
  CHECK(cosine(black1, white) < 0.99);

  MockTextEncoder text_enc(64);
  CHECK(black1.space_id() == text_enc.embed_text("x").space_id());

  CHECK_THROWS_AS(enc.embed_image((dir / "missing.pgm").string()), Error);
}

TEST_CASE("scripted mock chat") {
  MockChatModel chat(MockChatModel::Mode::Scripted);
  chat.add_script("fp-1", "scripted reply");
  CHECK(chat.chat(simple_request("anything", "fp-1")).text == "scripted reply");

  try {
    chat.chat(simple_request("anything", "fp-unknown"));
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::MalformedResponse);
    CHECK(std::string(e.what()).find("fp-unknown") != std::string::npos);
  }
}

TEST_CASE("content-hash fingerprints are stable") {
  ChatRequest a = simple_request("same text");
  ChatRequest b = simple_request("same text");
  ChatRequest c = simple_request("other text");
  CHECK(request_fingerprint(a) == request_fingerprint(b));
  CHECK(request_fingerprint(a) != request_fingerprint(c));
  CHECK(request_fingerprint(a).rfind("sha:", 0) == 0);
}

TEST_CASE("procedural mock understands every stage prompt") {
  MockChatModel chat(MockChatModel::Mode::Procedural);
  CHECK(chat.chat(simple_request(
                      "Answer: a leaf\nRefer to the following exemplar to "
                      "determine whether the original content can be converted "
                      "into a question format with visual options"))
            .text.find("Judgment:") != std::string::npos);
  CHECK(chat.chat(simple_request("Answer: a leaf\nGenerate a new question "
                                 "suitable for visual options"))
            .text.find("Question:") != std::string::npos);
  std::string opts =
      chat.chat(simple_request("Answer: a leaf\ngenerate multiple options and "
                               "description\nGenerate exactly 4 options"))
          .text;
  CHECK(opts.find("Option (a):") != std::string::npos);
  CHECK(opts.find("Option (d):") != std::string::npos);
  CHECK(chat.chat(simple_request("Please calculate the similarity between the "
                                 "given visual option and the descriptive text"))
            .text.find("Score:") != std::string::npos);
  CHECK_THROWS_AS(chat.chat(simple_request("meaningless")), Error);
}

TEST_CASE("mock image generator is pure in (prompt, template, seed)") {
  fs::path dir = temp_dir("t2i");
  MockImageGenerator gen(dir, "64x48");
  std::string p1 = gen.generate_image("a red apple", std::nullopt, 42);
  std::string p2 = gen.generate_image("a red apple", std::nullopt, 42);
  CHECK(p1 == p2);
  CHECK(read_text_file(p1) == read_text_file(p2));
  GrayImage img = load_pgm(p1);
  CHECK(img.width == 64);
  CHECK(img.height == 48);

  std::string p3 = gen.generate_image("a red apple", std::nullopt, 43);
  CHECK(p1 != p3);  // seed changes the image
  CHECK_THROWS_AS(gen.generate_image("", std::nullopt, 42), Error);

  // template conditioning pulls the output toward the reference image
  save_pgm(GrayImage::filled(32, 32, 255), dir / "tpl.pgm");
  std::string with_tpl =
      gen.generate_image("a red apple", (dir / "tpl.pgm").string(), 42);
  CHECK(read_text_file(with_tpl) != read_text_file(p1));
}

TEST_CASE("retry policy: transient failure then success under retries=2") {
  MockChatModel inner(MockChatModel::Mode::Scripted);
  inner.add_script("job", "done");
  FaultInjectingChat flaky(inner, [](const ChatRequest&, int prior) {
    return prior < 1 ? std::optional<Err>(Err::BackendUnavailable) : std::nullopt;
  });
  CallLog log;
  RetryPolicy policy;
  policy.max_retries = 2;
  policy.sleeper = [](std::chrono::milliseconds) {};
  RetryingChat chat(flaky, policy, &log);

  ChatResponse resp = chat.chat(simple_request("x", "job"));
  CHECK(resp.text == "done");
  auto records = log.snapshot();
  REQUIRE(records.size() == 1);
  CHECK(records[0].attempts == 2);
  CHECK(records[0].outcome == "ok");
}

TEST_CASE("retry policy never retries semantic failures and caps attempts") {
  MockChatModel inner(MockChatModel::Mode::Scripted);
  inner.add_script("job", "done");

  int malformed_calls = 0;
  FaultInjectingChat always_malformed(inner, [&](const ChatRequest&, int) {
    ++malformed_calls;
    return std::optional<Err>(Err::MalformedResponse);
  });
  RetryPolicy policy;
  policy.max_retries = 3;
  policy.sleeper = [](std::chrono::milliseconds) {};
  RetryingChat chat(always_malformed, policy, nullptr);
  CHECK_THROWS_AS(chat.chat(simple_request("x", "job")), Error);
  CHECK(malformed_calls == 1);

  int transient_calls = 0;
  FaultInjectingChat always_down(inner, [&](const ChatRequest&, int) {
    ++transient_calls;
    return std::optional<Err>(Err::BackendUnavailable);
  });
  RetryingChat chat2(always_down, policy, nullptr);
  CHECK_THROWS_AS(chat2.chat(simple_request("x", "job")), Error);
  CHECK(transient_calls == 1 + policy.max_retries);
}

TEST_CASE("rate-limited errors are retried") {
  MockChatModel inner(MockChatModel::Mode::Scripted);
  inner.add_script("job", "done");
  FaultInjectingChat limited(inner, [](const ChatRequest&, int prior) {
    return prior < 2 ? std::optional<Err>(Err::RateLimited) : std::nullopt;
  });
  RetryPolicy policy;
  policy.max_retries = 2;
  policy.sleeper = [](std::chrono::milliseconds) {};
  RetryingChat chat(limited, policy, nullptr);
  CHECK(chat.chat(simple_request("x", "job")).text == "done");
}

TEST_CASE("in-flight calls never exceed the concurrency cap") {
  MockChatModel chat(MockChatModel::Mode::Procedural, nullptr, 3);
  std::atomic<int> done{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&] {
      ChatRequest req = simple_request(
          "Please calculate the similarity between the given visual option and "
          "the descriptive text",
          "eval:load:" + std::to_string(done.fetch_add(1)));
      chat.chat(req);
    });
  }
  for (auto& t : threads) t.join();
  CHECK(chat.gate().high_water() <= 3);
  CHECK(chat.gate().high_water() >= 1);
}

TEST_CASE("embedding cache is write-once per content hash") {
  MockTextEncoder inner(32);
  CachingTextEncoder cached(inner);
  Embedding a = cached.embed_text("hello world");
  Embedding b = cached.embed_text("hello world");
  CHECK(a.values == b.values);
  CHECK(cached.cache_size() == 1);
  cached.embed_text("different");
  CHECK(cached.cache_size() == 2);
}

TEST_CASE("http chat wire format") {
  BackendConfig cfg;
  cfg.model_name = "test-model";
  ChatRequest req = simple_request("hello");
  req.messages.front().parts.push_back(
      {MessagePart::Kind::ImageRef, "http://example/img.png"});
  nlohmann::json body = nlohmann::json::parse(HttpChatModel::build_body(req, cfg));
  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == doctest::Approx(0.7));
  CHECK(body["top_p"] == doctest::Approx(0.8));
  CHECK(body["seed"] == 42);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"][0]["type"] == "text");
  CHECK(body["messages"][0]["content"][1]["type"] == "image_url");

  CHECK(HttpChatModel::parse_reply(
            R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
  CHECK_THROWS_AS(HttpChatModel::parse_reply("{}"), Error);
}

TEST_CASE("http t2i wire format carries size and seed") {
  BackendConfig cfg;
  cfg.model_name = "img-model";
  cfg.image_size = "1024x1024";
  nlohmann::json body = nlohmann::json::parse(
      HttpImageGenerator::build_body("a cat", std::nullopt, 42, cfg));
  CHECK(body["prompt"] == "a cat");
  CHECK(body["size"] == "1024x1024");
  CHECK(body["seed"] == 42);
  CHECK(body["response_format"] == "b64_json");
}

TEST_CASE("http chat against a local server retries 5xx then succeeds") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                if (hits.fetch_add(1) < 2) {
                  res.status = 503;
                  res.set_content("overloaded", "text/plain");
                  return;
                }
                res.set_content(R"({"choices":[{"message":{"content":"pong"}}]})",
                                "application/json");
              });
  int port = server.bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    WARN_MESSAGE(true, "cannot bind a local port; skipping http round trip");
    return;
  }
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig cfg;
  cfg.model_name = "m";
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.max_retries = 3;
  CallLog log;
  HttpChatModel chat(cfg, HttpEnv{}, &log);
  ChatResponse resp = chat.chat(simple_request("ping", "t"));
  CHECK(resp.text == "pong");
  CHECK(hits.load() == 3);
  auto records = log.snapshot();
  REQUIRE(records.size() == 1);
  CHECK(records[0].attempts == 3);

  // 404-class semantic errors are not retried
  hits = 100;
  server.Post("/v1/other", [](const httplib::Request&, httplib::Response&) {});
  server.stop();
  worker.join();
}
