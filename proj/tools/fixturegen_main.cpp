// cmos-fixturegen - deterministically regenerates everything under fixtures/:
// the demo dataset and scripted chat replies, the image bank, the sweep
// fixtures, and the golden prompt file. Run from the repository root:
//
//   cmos-fixturegen --out fixtures --templates assets/templates
//
// The sweep fixtures are constructed analytically (vectors placed at exact
// cosines against the live mock embeddings) and verified by running the real
// sweep before anything is considered final.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmos/dataset.hpp"
#include "cmos/discrimination.hpp"
#include "cmos/errors.hpp"
#include "cmos/image.hpp"
#include "cmos/kernels.hpp"
#include "cmos/mock_backends.hpp"
#include "cmos/option_synthesis.hpp"
#include "cmos/pipeline.hpp"
#include "cmos/ssim.hpp"
#include "cmos/sweep.hpp"
#include "cmos/util.hpp"

using namespace cmos;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDim = 64;

void write_image(const fs::path& path, std::uint64_t seed) {
  save_pgm(procedural_image(seed, 64, 64), path);
}

// --------------------------------------------------------------------------
// demo dataset + scripts
// --------------------------------------------------------------------------

void write_demo_fixtures(const fs::path& out) {
  fs::create_directories(out / "images");
  fs::create_directories(out / "scripts");

  struct Ex {
    const char* id;
    const char* context;
    const char* answer;
    const char* subject;
    const char* grade;
    bool image;
    bool convertible;
    const char* reason;
    const char* question;
  };
  const Ex exemplars[] = {
      {"ex-01", "Leaves change color in autumn when chlorophyll breaks down.",
       "a maple leaf", "NAT", "G1-6", true, true,
       "The answer is a concrete object with a distinctive shape that is easy "
       "to depict.", "Which leaf turns bright red in autumn?"},
      {"ex-02", "Towns often grow around a central market where goods are traded.",
       "the town market", "SOC", "G1-6", false, true,
       "A market scene is a familiar visual setting that students recognize.",
       "Where do people in the town trade goods?"},
      {"ex-03", "Igneous rocks form when molten magma cools and hardens.",
       "a granite rock", "NAT", "G7-12", true, true,
       "Rock types have recognizable textures that photographs capture well.",
       "Which rock forms from cooled magma?"},
      {"ex-04", "A metaphor compares two things without using like or as.",
       "a metaphor", "LAN", "G7-12", false, false,
       "A figure of speech has no canonical visual form to depict.",
       "What device compares two unlike things directly?"},
      {"ex-05", "The planets of the solar system orbit the sun at different distances.",
       "the planet Saturn", "NAT", "G1-6", true, true,
       "Planets have iconic appearances that render clearly as images.",
       "Which planet is famous for its rings?"},
      {"ex-06", "Plant cells contain chloroplasts that carry out photosynthesis.",
       "a chloroplast", "NAT", "G7-12", false, true,
       "Organelles are commonly shown in diagrams, so image options fit.",
       "Which organelle carries out photosynthesis?"},
  };

  std::string ex_lines;
  std::uint64_t img_seed = 101;
  for (const Ex& e : exemplars) {
    json j{{"id", e.id},           {"context", e.context},
           {"answer", e.answer},   {"subject", e.subject},
           {"grade", e.grade},     {"convertible", e.convertible},
           {"reason", e.reason},   {"question", e.question}};
    if (e.image) {
      std::string rel = std::string("images/") + e.id + ".pgm";
      write_image(out / rel, img_seed);
      j["image"] = rel;
    }
    ++img_seed;
    ex_lines += j.dump() + "\n";
  }
  write_text_file(out / "exemplars.jsonl", ex_lines);

  struct Inst {
    const char* id;
    const char* context;
    const char* answer;
    const char* subject;
    const char* grade;
    bool image;
  };
  const Inst instances[] = {
      {"demo-nat-01",
       "In autumn the leaves of maple trees turn bright red before falling.",
       "a maple leaf", "NAT", "G1-6", true},
      {"demo-soc-02",
       "Every Saturday the townspeople gather to trade vegetables and cloth.",
       "the town market", "SOC", "G1-6", false},
      {"demo-lan-03",
       "Writers use metaphors to compare two unlike things directly.",
       "a metaphor", "LAN", "G7-12", false},
      {"demo-nat-04",
       "Granite forms deep underground when magma cools very slowly.",
       "a granite rock", "NAT", "G7-12", true},
  };
  std::string inst_lines;
  for (const Inst& s : instances) {
    json j{{"id", s.id},         {"context", s.context}, {"answer", s.answer},
           {"subject", s.subject}, {"grade", s.grade}};
    if (s.image) {
      std::string rel = std::string("images/") + s.id + ".pgm";
      write_image(out / rel, img_seed);
      j["image"] = rel;
    }
    ++img_seed;
    inst_lines += j.dump() + "\n";
  }
  write_text_file(out / "instances.jsonl", inst_lines);

  // Scripted chat replies keyed by request tag. Score trails exercise
  // immediate acceptance, mid-loop acceptance, and the below-threshold path.
  json responses = json::object();
  auto script = [&](const std::string& tag, const std::string& reply) {
    responses[tag] = reply;
  };

  script("discriminate:demo-nat-01",
         "Reason: A maple leaf is a concrete object that is easy to depict.\n"
         "Judgment: TRUE");
  script("discriminate:demo-soc-02",
         "Reason: A market scene is a familiar, recognizable visual setting.\n"
         "Judgment: TRUE");
  script("discriminate:demo-lan-03",
         "Reason: A metaphor is an abstract device with no stable visual form.\n"
         "Judgment: FALSE");
  script("discriminate:demo-nat-04",
         "Reason: Rock textures photograph well and are visually distinct.\n"
         "Judgment: TRUE");

  script("qgen:demo-nat-01:0",
         "Question: Which picture shows a maple leaf?\n"
         "Reason: The leaf's five-lobed shape makes it visually distinctive.");
  script("qgen:demo-nat-01:1",
         "Question: Which picture shows a maple leaf?\n"
         "Reason: Maple leaves are iconic and easy to tell apart from other leaves.");
  script("qgen:demo-nat-01:2",
         "Question: Which picture shows a maple leaf?\n"
         "Reason: Students can identify the leaf from its outline alone.");
  script("qgen:demo-soc-02:0",
         "Question: Which image shows the town market?\n"
         "Reason: Market stalls form a recognizable scene.");
  script("qgen:demo-soc-02:1",
         "Question: Which of these pictures shows the town market?\n"
         "Reason: The gathering of traders is visually distinctive.");
  script("qgen:demo-soc-02:2",
         "Question: Where do the townspeople trade their goods?\n"
         "Reason: The market square can be depicted directly.");
  script("qgen:demo-nat-04:0",
         "Question: Which picture shows a granite rock?\n"
         "Reason: Granite's speckled texture is easy to recognize.");
  script("qgen:demo-nat-04:1",
         "Question: Which image depicts granite?\n"
         "Reason: The coarse crystal pattern stands out in photographs.");
  script("qgen:demo-nat-04:2",
         "Question: Which rock sample is granite?\n"
         "Reason: Granite looks clearly different from layered rocks.");

  script("optgen:demo-nat-01",
         "Option (a): a maple leaf | Description: a flat red maple leaf with "
         "five pointed lobes on a white background\n"
         "Option (b): an oak leaf | Description: a green oak leaf with rounded "
         "lobes on a white background\n"
         "Option (c): a pine needle cluster | Description: a bundle of thin "
         "green pine needles\n"
         "Option (d): a fern frond | Description: a feathery green fern frond "
         "against white");
  script("optgen:demo-soc-02",
         "Option (a): a quiet library | Description: rows of bookshelves in a "
         "quiet library\n"
         "Option (b): the town market | Description: busy market stalls with "
         "vegetables and cloth\n"
         "Option (c): a school classroom | Description: a classroom with desks "
         "and a blackboard\n"
         "Option (d): a train station | Description: a platform with a waiting "
         "train");
  script("optgen:demo-nat-04",
         "Option (a): a granite rock | Description: a speckled gray granite "
         "boulder\n"
         "Option (b): a sandstone slab | Description: a layered tan sandstone "
         "slab\n"
         "Option (c): a marble block | Description: a polished white marble "
         "block with veins\n"
         "Option (d): a slate sheet | Description: a flat dark slate sheet");

  auto eval_script = [&](const std::string& id, const std::string& label,
                         std::initializer_list<double> scores) {
    int round = 0;
    for (double s : scores) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "Score: %.2f\nSuggestions: %s", s,
                    s >= 0.8 ? "none needed"
                             : "sharpen the main subject and simplify the background");
      script("eval:" + id + ":" + label + ":" + std::to_string(round++), buf);
    }
  };
  for (const char* label : {"a", "b", "c", "d"})
    eval_script("demo-nat-01", label, {0.90});
  eval_script("demo-soc-02", "a", {0.50, 0.65, 0.85});
  eval_script("demo-soc-02", "b", {0.90});
  eval_script("demo-soc-02", "c", {0.88});
  eval_script("demo-soc-02", "d", {0.92});
  eval_script("demo-nat-04", "a", {0.50, 0.60, 0.70, 0.75});
  eval_script("demo-nat-04", "b", {0.85});
  eval_script("demo-nat-04", "c", {0.90});
  eval_script("demo-nat-04", "d", {0.95});

  write_text_file(out / "scripts" / "demo_chat.json",
                  json{{"responses", responses}}.dump(2) + "\n");

  write_text_file(out / "references.jsonl",
                  json{{"id", "demo-nat-01"},
                       {"question", "Which picture shows a maple leaf?"}}
                          .dump() +
                      "\n" +
                      json{{"id", "demo-soc-02"},
                           {"question", "Which image shows the town market?"}}
                          .dump() +
                      "\n" +
                      json{{"id", "demo-nat-04"},
                           {"question", "Which picture shows a granite rock?"}}
                          .dump() +
                      "\n");

  // image bank: procedural textures with plain captions
  fs::create_directories(out / "bank");
  const char* captions[] = {
      "a red leaf on a white background", "a busy market with stalls",
      "a speckled gray rock",             "a green plant cell diagram",
      "a ringed planet in dark space",
  };
  std::string bank_lines;
  for (int i = 0; i < 5; ++i) {
    std::string id = "bank-" + std::to_string(i + 1);
    std::string rel = id + ".pgm";
    write_image(out / "bank" / rel, 900 + static_cast<std::uint64_t>(i));
    bank_lines += json{{"id", id}, {"path", rel}, {"caption", captions[i]}}.dump() + "\n";
  }
  write_text_file(out / "bank" / "bank.jsonl", bank_lines);
  std::printf("demo fixtures written\n");
}

// --------------------------------------------------------------------------
// golden prompt
// --------------------------------------------------------------------------

void write_golden_prompt(const fs::path& out, const fs::path& templates_dir) {
  TemplateSet templates = TemplateSet::load(templates_dir);
  DatasetSplit exemplars =
      load_dataset(out / "exemplars.jsonl", SplitKind::D_E, LoadMode::Strict);
  DatasetSplit instances =
      load_dataset(out / "instances.jsonl", SplitKind::D_Q, LoadMode::Strict);
  ChatRequest req = build_discrimination_prompt(instances.instances.at(0),
                                                exemplars.exemplars.at(0),
                                                templates);
  fs::create_directories(out / "golden");
  write_text_file(out / "golden" / "discrimination_prompt.txt",
                  req.messages.front().parts.front().content);
  std::printf("golden prompt written\n");
}

// --------------------------------------------------------------------------
// alpha sweep fixture: three candidates whose TMS lines make the winner move
// A -> B -> C across the grid, with the reference equal to B's question, so
// mean BLEU peaks exactly at alpha = 0.6.
// --------------------------------------------------------------------------

Embedding planar(double angle, const std::string& encoder_id) {
  std::vector<double> v(kDim, 0.0);
  v[0] = std::cos(angle);
  v[1] = std::sin(angle);
  return {std::move(v), encoder_id};
}

void write_alpha_fixture(const fs::path& out) {
  const std::string enc = "fix-text@fixspace";
  const double deg = std::acos(-1.0) / 180.0;
  std::vector<double> grid = make_grid(0.1, 1.2, 0.1);

  // Search planar angles for the winner pattern A(<=0.5) B(0.6) C(>=0.7).
  auto winner_at = [&](double alpha, const std::vector<Embedding>& qs,
                       const Embedding& vp) {
    Centroid cq = centroid(qs);
    std::size_t best = 0;
    double best_tms = 0.0;
    for (std::size_t k = 0; k < qs.size(); ++k) {
      double c_int = 1.0 + cosine(qs[k], cq.mean);  // identical r vectors
      double c_ext = cosine(qs[k], vp);
      double tms = alpha * c_int + c_ext;
      if (k == 0 || tms > best_tms) {
        best = k;
        best_tms = tms;
      }
    }
    return best;
  };

  bool found = false;
  double best_a0 = 0, best_a1 = 0, best_a2 = 0, best_phi = 0;
  for (int a0 = 0; a0 < 360 && !found; a0 += 10)
    for (int a1 = 0; a1 < 360 && !found; a1 += 10)
      for (int a2 = 0; a2 < 360 && !found; a2 += 10)
        for (int phi = 0; phi < 360 && !found; phi += 10) {
          std::vector<Embedding> qs{planar(a0 * deg, enc), planar(a1 * deg, enc),
                                    planar(a2 * deg, enc)};
          Embedding vp = planar(phi * deg, enc);
          bool ok = true;
          for (double alpha : grid) {
            std::size_t want = alpha < 0.55 ? 0 : (alpha < 0.65 ? 1 : 2);
            if (winner_at(alpha, qs, vp) != want) {
              ok = false;
              break;
            }
          }
          if (ok) {
            found = true;
            best_a0 = a0 * deg;
            best_a1 = a1 * deg;
            best_a2 = a2 * deg;
            best_phi = phi * deg;
          }
        }
  if (!found) throw Error(Err::EmptyGrid, "no alpha fixture geometry found");

  const char* questions[] = {"What color is the evening sky?",
                             "Which image shows a ripe tomato?",
                             "Name the tallest mountain on earth?"};
  const char* reference = questions[1];

  json candidates = json::array();
  double angles[] = {best_a0, best_a1, best_a2};
  for (int k = 0; k < 3; ++k) {
    Embedding q = planar(angles[k], enc);
    Embedding r = planar(0.0, enc);
    candidates.push_back(
        {{"question", questions[k]},
         {"reason", "fixture reasoning " + std::to_string(k + 1)},
         {"q_vec", {{"encoder_id", enc}, {"values", q.values}}},
         {"r_vec", {{"encoder_id", enc}, {"values", r.values}}}});
  }
  Embedding vp = planar(best_phi, enc);
  json record{{"id", "alpha-fix-1"},
              {"candidates", std::move(candidates)},
              {"v_p", {{"encoder_id", enc}, {"values", vp.values}}}};

  fs::create_directories(out / "sweep");
  write_text_file(out / "sweep" / "alpha_audit.jsonl", record.dump() + "\n");
  write_text_file(out / "sweep" / "alpha_refs.jsonl",
                  json{{"id", "alpha-fix-1"}, {"question", reference}}.dump() + "\n");

  // verify through the real sweep path
  SweepReport report = sweep_alpha(load_alpha_audits(out / "sweep" / "alpha_audit.jsonl"),
                                   load_question_refs(out / "sweep" / "alpha_refs.jsonl"),
                                   grid);
  if (std::abs(report.argmax_value() - 0.6) > 1e-9)
    throw Error(Err::EmptyGrid, "alpha fixture verification failed");
  std::printf("alpha fixture verified (argmax %.2f, angles %.0f/%.0f/%.0f phi %.0f)\n",
              report.argmax_value(), best_a0 / deg, best_a1 / deg, best_a2 / deg,
              best_phi / deg);
}

// --------------------------------------------------------------------------
// beta sweep fixture: bank vectors placed at exact cosines against the mock
// embedding of the option description, so the Eq.-style retrieval score
// beta*s_j + c_j hands the template slot that measured best to beta = 1.4.
// --------------------------------------------------------------------------

Embedding at_cosine(const Embedding& u, const Embedding& w, double c,
                    const std::string& encoder_id) {
  Embedding v;
  v.encoder_id = encoder_id;
  v.values.resize(u.dim());
  double s = std::sqrt(1.0 - c * c);
  for (std::size_t i = 0; i < u.dim(); ++i)
    v.values[i] = c * u.values[i] + s * w.values[i];
  return v;
}

void write_beta_fixture(const fs::path& out, const fs::path& templates_dir) {
  const std::string description = "a ripe red apple on a white plate";
  const std::string instance_id = "beta-opt-1";
  const std::string label = "a";

  MockTextEncoder text_enc(kDim, 42);
  MockImageEncoder image_enc(kDim, 8);
  MockChatModel chat(MockChatModel::Mode::Procedural);
  TemplateSet templates = TemplateSet::load(templates_dir);

  fs::path bank_dir = out / "sweep" / "beta_bank";
  fs::create_directories(bank_dir);
  for (int j = 0; j < 3; ++j)
    write_image(bank_dir / ("tpl-" + std::to_string(j + 1) + ".pgm"),
                1700 + static_cast<std::uint64_t>(j));

  // Measure the final CLIP-T per template through the real tune loop.
  fs::path measure_dir = bank_dir / "measure";
  MockImageGenerator t2i(measure_dir, "64x64");
  TuneConfig tune;
  double measured[3];
  for (int j = 0; j < 3; ++j) {
    CallScope scope("sweep:beta", instance_id);
    OptionCandidate opt;
    opt.label = label;
    opt.text = description;
    opt.description = description;
    std::string tpl = (bank_dir / ("tpl-" + std::to_string(j + 1) + ".pgm")).string();
    opt.template_ref = TemplateRef{"tpl-" + std::to_string(j + 1), tpl, "", 0.0};
    synthesize_visual(opt, tune, chat, t2i, templates, 42);
    measured[j] = clip_t(opt.attempts[opt.selected_attempt].image_ref, description,
                         image_enc, text_enc);
  }
  std::printf("beta fixture measured clip_t: %.6f %.6f %.6f\n", measured[0],
              measured[1], measured[2]);

  // Retrieval lines: slot 0 wins for beta <= 1.2, slot 1 only at 1.4,
  // slot 2 from 1.6 up. The best-measured template takes slot 1.
  int order[3] = {0, 1, 2};
  std::sort(order, order + 3, [&](int a, int b) { return measured[a] > measured[b]; });
  int slot_of_template[3];
  slot_of_template[order[0]] = 1;  // best -> wins exactly at 1.4
  slot_of_template[order[1]] = 2;  // second -> wins at 1.6+
  slot_of_template[order[2]] = 0;  // worst -> wins early
  const double line_s[3] = {0.0, 0.5, 0.9};
  const double line_c[3] = {0.85, 0.22, -0.45};

  Embedding u = text_enc.embed_text(description);
  // unit vector orthogonal to u
  Embedding w;
  w.encoder_id = u.encoder_id;
  std::uint64_t state = fnv1a64("beta-orthogonal-seed");
  w.values.resize(kDim);
  for (std::size_t i = 0; i < kDim; ++i) w.values[i] = uniform01(state) * 2 - 1;
  double proj = kern::dot(w.values.data(), u.values.data(), kDim);
  for (std::size_t i = 0; i < kDim; ++i) w.values[i] -= proj * u.values[i];
  double n = std::sqrt(kern::sumsq(w.values.data(), kDim));
  for (double& x : w.values) x /= n;

  std::string manifest_lines, sidecar_lines;
  sidecar_lines += json{{"text_encoder_id", text_enc.encoder_id()},
                        {"image_encoder_id", image_enc.encoder_id()}}
                       .dump() +
                   "\n";
  for (int j = 0; j < 3; ++j) {
    int slot = slot_of_template[j];
    std::string id = "tpl-" + std::to_string(j + 1);
    Embedding v_img = at_cosine(u, w, line_s[slot], image_enc.encoder_id());
    Embedding v_cap = at_cosine(u, w, line_c[slot], text_enc.encoder_id());
    manifest_lines += json{{"id", id},
                           {"path", id + ".pgm"},
                           {"caption", "fixture template " + std::to_string(j + 1)}}
                          .dump() +
                      "\n";
    sidecar_lines += json{{"id", id},
                          {"v_img", {{"encoder_id", v_img.encoder_id},
                                     {"values", v_img.values}}},
                          {"v_cap", {{"encoder_id", v_cap.encoder_id},
                                     {"values", v_cap.values}}}}
                         .dump() +
                     "\n";
  }
  write_text_file(bank_dir / "bank.jsonl", manifest_lines);
  write_text_file(bank_dir / "bank_embeddings.jsonl", sidecar_lines);
  write_text_file(out / "sweep" / "beta_options.jsonl",
                  json{{"instance_id", instance_id},
                       {"label", label},
                       {"description", description}}
                          .dump() +
                      "\n");
  fs::remove_all(measure_dir);

  // verify through the real sweep path
  ImageBank bank = load_bank(bank_dir);
  std::vector<BetaSweepOption> options{{instance_id, label, description}};
  fs::path verify_dir = bank_dir / "verify";
  MockImageGenerator t2i_verify(verify_dir, "64x64");
  SweepReport report =
      sweep_beta(bank, options, tune, chat, t2i_verify, text_enc, image_enc,
                 templates, 42, make_grid(0.4, 1.8, 0.2));
  fs::remove_all(verify_dir);
  if (std::abs(report.argmax_value() - 1.4) > 1e-9)
    throw Error(Err::EmptyGrid, "beta fixture verification failed");
  std::printf("beta fixture verified (argmax %.2f)\n", report.argmax_value());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regenerate the fixture tree"};
  std::string out = "fixtures";
  std::string templates_dir = "assets/templates";
  app.add_option("--out", out, "fixture directory");
  app.add_option("--templates", templates_dir, "prompt template directory");
  CLI11_PARSE(app, argc, argv);

  try {
    write_demo_fixtures(out);
    write_golden_prompt(out, templates_dir);
    write_alpha_fixture(out);
    write_beta_fixture(out, templates_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fixturegen failed: %s\n", e.what());
    return 1;
  }
  return 0;
}
