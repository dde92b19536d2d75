#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "cmos/discrimination.hpp"
#include "cmos/errors.hpp"
#include "cmos/image.hpp"
#include "cmos/mock_backends.hpp"
#include "cmos/util.hpp"

using namespace cmos;
namespace fs = std::filesystem;

namespace {

const fs::path kSourceDir = CMOS_SOURCE_DIR;

TemplateSet templates() {
  return TemplateSet::load(kSourceDir / "assets" / "templates");
}

ContentInstance instance(const std::string& id, bool with_image = false) {
  ContentInstance s;
  s.id = id;
  s.context = "Some science context about " + id + ".";
  s.answer = "an object";
  if (with_image) {
    fs::path dir = fs::temp_directory_path() / "cmos_disc";
    fs::create_directories(dir);
    fs::path img = dir / (id + ".pgm");
    save_pgm(procedural_image(fnv1a64(id), 16, 16), img);
    s.image_ref = img.string();
  }
  return s;
}

Exemplar exemplar(const std::string& id, bool with_image = false) {
  Exemplar ex;
  ex.instance = instance(id, with_image);
  ex.convertible = true;
  ex.reason = "the entity is concrete";
  return ex;
}

}  // namespace

TEST_CASE("parse_judgment accepts the canonical formats") {
  Judgment j = parse_judgment("Reason: clear visual entity\nJudgment: TRUE");
  CHECK(j.convertible);
  CHECK(j.reason == "clear visual entity");

  CHECK_FALSE(parse_judgment("Reason: too abstract\nJudgment: FALSE").convertible);
  CHECK(parse_judgment("Reason: ok\nJudgment: yes").convertible);
  CHECK_FALSE(parse_judgment("Reason: nope\nJudgment: No").convertible);
  CHECK(parse_judgment("reasoning: fine shapes\nconvertible: true").convertible);
}

TEST_CASE("the last judgment marker wins") {
  Judgment j = parse_judgment(
      "Reason: first thoughts\nJudgment: FALSE\n"
      "Reason: on reflection the object is depictable\nJudgment: TRUE");
  CHECK(j.convertible);
  CHECK(j.reason == "on reflection the object is depictable");
}

TEST_CASE("hedges and malformed replies are parse failures") {
  CHECK_THROWS_AS(parse_judgment("Judgment: partially"), Error);
  CHECK_THROWS_AS(parse_judgment("free text with no markers"), Error);
  CHECK_THROWS_AS(parse_judgment("Reason: \nJudgment: TRUE"), Error);
  CHECK_THROWS_AS(parse_judgment("Judgment: TRUE"), Error);  // no reason
  try {
    parse_judgment("Reason: hmm\nJudgment: maybe");
  } catch (const Error& e) {
    CHECK(e.code() == Err::ParseFailure);
  }
}

TEST_CASE("parse(render(j)) round-trips") {
  for (bool convertible : {true, false}) {
    for (const char* reason :
         {"a single line", "entities are concrete and countable"}) {
      Judgment j{convertible, reason, ""};
      Judgment back = parse_judgment(render_judgment(j));
      CHECK(back.convertible == j.convertible);
      CHECK(back.reason == j.reason);
    }
  }
}

TEST_CASE("prompt carries one image part per present image_ref") {
  TemplateSet t = templates();
  ChatRequest none = build_discrimination_prompt(instance("txt-1"), exemplar("ex-t"), t);
  std::size_t image_parts = 0;
  for (const MessagePart& p : none.messages.front().parts)
    if (p.kind == MessagePart::Kind::ImageRef) ++image_parts;
  CHECK(image_parts == 0);

  ChatRequest both = build_discrimination_prompt(instance("img-1", true),
                                                 exemplar("ex-i", true), t);
  image_parts = 0;
  for (const MessagePart& p : both.messages.front().parts)
    if (p.kind == MessagePart::Kind::ImageRef) ++image_parts;
  CHECK(image_parts == 2);
}

TEST_CASE("prompt assembly is pure and size-capped") {
  TemplateSet t = templates();
  ContentInstance s = instance("pure-1");
  Exemplar ex = exemplar("ex-pure");
  ChatRequest a = build_discrimination_prompt(s, ex, t);
  ChatRequest b = build_discrimination_prompt(s, ex, t);
  CHECK(a.joined_text() == b.joined_text());
  CHECK(a.tag == b.tag);

  ContentInstance huge = instance("huge-1");
  huge.context.assign(kMaxPromptChars + 1, 'x');
  CHECK_THROWS_AS(build_discrimination_prompt(huge, ex, t), Error);

  Exemplar bad = ex;
  bad.reason.clear();
  CHECK_THROWS_AS(build_discrimination_prompt(s, bad, t), Error);
}

TEST_CASE("golden discrimination prompt is byte-stable") {
  fs::path golden = kSourceDir / "fixtures" / "golden" / "discrimination_prompt.txt";
  REQUIRE_MESSAGE(fs::exists(golden), "run cmos-fixturegen to create fixtures");
  DatasetSplit exemplars = load_dataset(kSourceDir / "fixtures" / "exemplars.jsonl",
                                        SplitKind::D_E, LoadMode::Strict);
  DatasetSplit instances = load_dataset(kSourceDir / "fixtures" / "instances.jsonl",
                                        SplitKind::D_Q, LoadMode::Strict);
  ChatRequest req = build_discrimination_prompt(instances.instances.at(0),
                                                exemplars.exemplars.at(0),
                                                templates());
  CHECK(req.messages.front().parts.front().content == read_text_file(golden));
}

namespace {

// A store whose retrieval outcome is forced: one exemplar only.
ExemplarStore single_store(const Exemplar& ex) {
  StoreEntry entry;
  entry.exemplar = ex;
  entry.v_text = {{1, 0}, "enc@s"};
  entry.v_answer = {{0, 1}, "enc@s"};
  ExemplarStore store;
  store.text_encoder_id = "enc@s";
  store.image_encoder_id = "enc-img@s";
  store.entries.push_back(entry);
  return store;
}

QueryEmbeddings query() {
  return {{{1, 0}, "enc@s"}, {{0, 1}, "enc@s"}, std::nullopt};
}

}  // namespace

TEST_CASE("discriminate parses a scripted verdict") {
  TemplateSet t = templates();
  ContentInstance s = instance("d-1");
  CallLog log;
  MockChatModel chat(MockChatModel::Mode::Scripted, &log);
  chat.add_script("discriminate:d-1",
                  "Judgment: TRUE\nReason: clear visual entity\nJudgment: TRUE");
  DiscriminationResult r = discriminate(s, single_store(exemplar("ex")), query(),
                                        chat, t);
  CHECK(r.judgment.convertible);
  CHECK(log.snapshot().size() == 1);  // one chat call on the happy path
  CHECK_FALSE(r.template_version.empty());
}

TEST_CASE("unparseable reply is re-asked once, then surfaced with raw text") {
  TemplateSet t = templates();
  ContentInstance s = instance("d-2");
  CallLog log;
  MockChatModel chat(MockChatModel::Mode::Scripted, &log);
  chat.add_script("discriminate:d-2", "I cannot commit to an answer here.");
  chat.add_script("discriminate:d-2:retry", "still free text, sorry");
  try {
    discriminate(s, single_store(exemplar("ex")), query(), chat, t);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::ParseFailure);
    CHECK(std::string(e.what()).find("free text") != std::string::npos);
  }
  CHECK(log.snapshot().size() == 2);  // at most two calls on the re-ask path

  // re-ask that recovers
  chat.add_script("discriminate:d-2:retry2", "unused");
  MockChatModel chat2(MockChatModel::Mode::Scripted);
  chat2.add_script("discriminate:d-2", "hmm, thinking out loud");
  chat2.add_script("discriminate:d-2:retry", "Reason: fine\nJudgment: TRUE");
  CHECK(discriminate(s, single_store(exemplar("ex")), query(), chat2, t)
            .judgment.convertible);
}

TEST_CASE("a scripted batch reproduces its co-authored labels exactly") {
  TemplateSet t = templates();
  MockChatModel chat(MockChatModel::Mode::Scripted);
  bool labels[10];
  for (int i = 0; i < 10; ++i) {
    labels[i] = i % 3 != 0;  // 6 TRUE / 4 FALSE among 10
    chat.add_script("discriminate:batch-" + std::to_string(i),
                    std::string("Reason: scripted\nJudgment: ") +
                        (labels[i] ? "TRUE" : "FALSE"));
  }
  int correct = 0;
  for (int i = 0; i < 10; ++i) {
    ContentInstance s = instance("batch-" + std::to_string(i));
    DiscriminationResult r = discriminate(s, single_store(exemplar("ex")), query(),
                                          chat, t);
    if (r.judgment.convertible == labels[i]) ++correct;
  }
  CHECK(correct == 10);
}

TEST_CASE("construct_exemplar fills judgment and reason from the reply") {
  TemplateSet t = templates();
  MockChatModel chat(MockChatModel::Mode::Scripted);
  chat.add_script("construct:c-1",
                  "Reasoning: the answer names a depictable object\nConvertible: TRUE");
  ContentInstance s = instance("c-1");
  Exemplar ex = construct_exemplar(s, std::string("original question?"), chat, t);
  CHECK(ex.convertible);
  CHECK(ex.reason == "the answer names a depictable object");
  CHECK(ex.question == "original question?");
  CHECK(ex.instance.id == "c-1");
}

TEST_CASE("a batch of constructions itemizes failures") {
  TemplateSet t = templates();
  MockChatModel chat(MockChatModel::Mode::Scripted);
  chat.add_script("construct:ok-1", "Reasoning: fine\nConvertible: TRUE");
  chat.add_script("construct:bad-1", "no structure at all");
  chat.add_script("construct:bad-1:retry", "still nothing");
  chat.add_script("construct:ok-2", "Reasoning: fine too\nConvertible: FALSE");

  std::vector<std::string> failures;
  std::vector<Exemplar> built;
  for (const std::string& id : {"ok-1", "bad-1", "ok-2"}) {
    try {
      built.push_back(construct_exemplar(instance(id), std::nullopt, chat, t));
    } catch (const Error& e) {
      failures.push_back(id + ": " + e.what());
    }
  }
  CHECK(built.size() == 2);
  REQUIRE(failures.size() == 1);
  CHECK(failures[0].rfind("bad-1", 0) == 0);
}
