#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cmos/dataset.hpp"
#include "cmos/errors.hpp"
#include "cmos/image.hpp"
#include "cmos/manifest.hpp"
#include "cmos/util.hpp"

using namespace cmos;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("cmos_data_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_lines(const fs::path& file, const std::vector<std::string>& lines) {
  std::string body;
  for (const std::string& l : lines) body += l + "\n";
  write_text_file(file, body);
}

}  // namespace

TEST_CASE("loads a file of valid records") {
  fs::path dir = temp_dir("valid");
  write_lines(dir / "d.jsonl",
              {R"({"id":"a1","context":"ctx one","answer":"ans","subject":"NAT","grade":"G1-6"})",
               R"({"id":"a2","context":"ctx two","answer":"ans2","subject":"SOC","grade":"G7-12"})",
               R"({"id":"a3","context":"ctx three","answer":"ans3","subject":"weird","grade":"G1-6"})"});
  DatasetSplit split = load_dataset(dir / "d.jsonl", SplitKind::D_C);
  CHECK(split.instances.size() == 3);
  CHECK(split.instances[0].subject == Subject::NAT);
  CHECK(split.instances[1].grade == GradeBand::G7_12);
  CHECK(split.instances[2].subject == Subject::Custom);  // unknown -> custom tag
  CHECK(split.instances[2].subject_raw == "weird");
  CHECK(split.instances[0].modality() == Modality::TXT);
}

TEST_CASE("missing answer is a schema violation naming the field") {
  fs::path dir = temp_dir("noanswer");
  write_lines(dir / "d.jsonl", {R"({"id":"a1","context":"ctx"})"});
  try {
    load_dataset(dir / "d.jsonl", SplitKind::D_C);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::SchemaViolation);
    CHECK(std::string(e.what()).find("answer") != std::string::npos);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("exemplar with empty reason fails strict load") {
  fs::path dir = temp_dir("exreason");
  write_lines(dir / "e.jsonl",
              {R"({"id":"e1","context":"c","answer":"a","convertible":true,"reason":""})"});
  CHECK_THROWS_AS(load_dataset(dir / "e.jsonl", SplitKind::D_E), Error);
}

TEST_CASE("duplicate ids rejected") {
  fs::path dir = temp_dir("dup");
  write_lines(dir / "d.jsonl",
              {R"({"id":"x","context":"c1","answer":"a1"})",
               R"({"id":"x","context":"c2","answer":"a2"})"});
  try {
    load_dataset(dir / "d.jsonl", SplitKind::D_C);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::DuplicateId);
  }
}

TEST_CASE("lenient mode skips bad records and reports them") {
  fs::path dir = temp_dir("lenient");
  write_lines(dir / "d.jsonl",
              {R"({"id":"ok1","context":"c","answer":"a"})", "not json at all",
               R"({"id":"bad","context":"c"})",
               R"({"id":"ok2","context":"c","answer":"a"})"});
  LoadReport report;
  DatasetSplit split =
      load_dataset(dir / "d.jsonl", SplitKind::D_C, LoadMode::Lenient, &report);
  CHECK(split.instances.size() == 2);
  CHECK(report.skipped == 2);
  CHECK(report.issues.size() == 2);
  CHECK(report.issues[1].line == 3);
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_dataset("no/such/file.jsonl", SplitKind::D_C), Error);
}

TEST_CASE("strict mode verifies image resolvability") {
  fs::path dir = temp_dir("img");
  write_lines(dir / "d.jsonl",
              {R"({"id":"i1","context":"c","answer":"a","image":"missing.pgm"})"});
  CHECK_THROWS_AS(load_dataset(dir / "d.jsonl", SplitKind::D_C), Error);
  LoadReport report;
  DatasetSplit lenient =
      load_dataset(dir / "d.jsonl", SplitKind::D_C, LoadMode::Lenient, &report);
  CHECK(lenient.instances.size() == 1);  // lenient keeps it
}

TEST_CASE("round trip preserves every field") {
  fs::path dir = temp_dir("roundtrip");
  write_lines(dir / "e.jsonl",
              {R"({"id":"e1","context":"ctx","answer":"ans","subject":"LAN","grade":"G7-12","convertible":false,"reason":"too abstract","question":"orig?"})",
               R"({"id":"e2","context":"ctx2","answer":"ans2","subject":"NAT","grade":"G1-6","convertible":true,"reason":"fine"})"});
  DatasetSplit split =
      load_dataset(dir / "e.jsonl", SplitKind::D_E, LoadMode::Lenient);
  save_dataset(split, dir / "e2.jsonl");
  DatasetSplit back =
      load_dataset(dir / "e2.jsonl", SplitKind::D_E, LoadMode::Lenient);
  REQUIRE(back.exemplars.size() == split.exemplars.size());
  for (std::size_t i = 0; i < back.exemplars.size(); ++i) {
    const Exemplar& x = split.exemplars[i];
    const Exemplar& y = back.exemplars[i];
    CHECK(x.instance.id == y.instance.id);
    CHECK(x.instance.context == y.instance.context);
    CHECK(x.instance.answer == y.instance.answer);
    CHECK(x.instance.image_ref == y.instance.image_ref);
    CHECK(x.instance.subject == y.instance.subject);
    CHECK(x.instance.grade == y.instance.grade);
    CHECK(x.convertible == y.convertible);
    CHECK(x.reason == y.reason);
    CHECK(x.question == y.question);
  }
}

TEST_CASE("empty bundle set yields a manifest with zero entries") {
  fs::path dir = temp_dir("emptymanifest");
  Manifest m = save_artifacts({}, dir / "out", "fp", 42);
  CHECK(m.files.empty());
  CHECK(fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("one bundle with four single-attempt options -> 4 images + 1 metadata") {
  fs::path dir = temp_dir("manifestcount");
  GrayImage img = procedural_image(5, 16, 16);
  fs::path img_file = dir / "gen.pgm";
  save_pgm(img, img_file);

  QuestionBundle bundle;
  bundle.instance.id = "q1";
  bundle.instance.context = "ctx";
  bundle.instance.answer = "ans";
  bundle.judgment = {true, "fine", ""};
  QrCandidate cand;
  cand.question = "Q?";
  cand.reason = "R";
  cand.q_vec = {{1, 0}, "e@s"};
  cand.r_vec = {{0, 1}, "e@s"};
  bundle.selection.scored.push_back(cand);
  bundle.selection.winner_index = 0;
  bundle.v_p = {{1, 1}, "e@s"};
  for (const char* label : {"a", "b", "c", "d"}) {
    OptionCandidate opt;
    opt.label = label;
    opt.text = std::string("option ") + label;
    opt.is_answer = std::string(label) == "a";
    opt.description = "desc";
    opt.attempts.push_back({img_file.string(), 0.9, ""});
    opt.accepted = true;
    bundle.options.push_back(opt);
  }

  Manifest m = save_artifacts(std::vector<QuestionBundle>{bundle}, dir / "out",
                              "fp", 42, {}, {}, 1);
  std::size_t images = 0, metadata = 0;
  for (const ManifestFile& f : m.files) {
    if (f.role == "image") ++images;
    if (f.role == "metadata") ++metadata;
  }
  CHECK(images == 4);
  CHECK(metadata == 1);

  // bundle round trip through the metadata file
  auto bundles = load_bundles(dir / "out");
  REQUIRE(bundles.size() == 1);
  CHECK(bundles[0].instance.id == "q1");
  CHECK(bundles[0].options.size() == 4);
  CHECK(bundles[0].winner().question == "Q?");
}

TEST_CASE("identical runs produce byte-identical manifests") {
  fs::path dir = temp_dir("deterministic");
  GrayImage img = procedural_image(6, 16, 16);
  save_pgm(img, dir / "gen.pgm");

  QuestionBundle bundle;
  bundle.instance.id = "q1";
  bundle.instance.context = "ctx";
  bundle.instance.answer = "ans";
  QrCandidate cand;
  cand.question = "Q?";
  cand.reason = "R";
  cand.q_vec = {{1, 0}, "e@s"};
  cand.r_vec = {{0, 1}, "e@s"};
  bundle.selection.scored.push_back(cand);
  bundle.v_p = {{1, 1}, "e@s"};
  OptionCandidate opt;
  opt.label = "a";
  opt.text = "ans";
  opt.is_answer = true;
  opt.description = "desc";
  opt.attempts.push_back({(dir / "gen.pgm").string(), 0.9, ""});
  bundle.options.push_back(opt);

  save_artifacts(std::vector<QuestionBundle>{bundle}, dir / "out1", "fp", 42, {}, {}, 1);
  save_artifacts(std::vector<QuestionBundle>{bundle}, dir / "out2", "fp", 42, {}, {}, 1);
  CHECK(read_text_file(dir / "out1" / "manifest.json") ==
        read_text_file(dir / "out2" / "manifest.json"));
}
