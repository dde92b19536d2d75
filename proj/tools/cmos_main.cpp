// cmos - command-line front end for the question/visual-option pipeline.

#include <cstdio>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "cmos/config.hpp"
#include "cmos/dataset.hpp"
#include "cmos/discrimination.hpp"
#include "cmos/errors.hpp"
#include "cmos/http_backends.hpp"
#include "cmos/mock_backends.hpp"
#include "cmos/pipeline.hpp"
#include "cmos/sweep.hpp"
#include "cmos/util.hpp"

namespace {

using namespace cmos;

// Owns whichever backend set the run mode asks for and hands out the
// interface view the pipeline consumes.
struct BackendBundle {
  CallLog log;
  std::unique_ptr<MockTextEncoder> mock_text;
  std::unique_ptr<MockImageEncoder> mock_image;
  std::unique_ptr<MockChatModel> mock_chat;
  std::unique_ptr<MockImageGenerator> mock_t2i;
  std::unique_ptr<HttpTextEncoder> http_text;
  std::unique_ptr<HttpImageEncoder> http_image;
  std::unique_ptr<HttpChatModel> http_chat;
  std::unique_ptr<HttpImageGenerator> http_t2i;
  std::unique_ptr<CachingTextEncoder> text_cache;
  std::unique_ptr<CachingImageEncoder> image_cache;

  TextEncoder* text = nullptr;
  ImageEncoder* image = nullptr;
  ChatModel* chat = nullptr;
  ImageGenerator* t2i = nullptr;

  PipelineBackends view() { return {*text, *image, *chat, *t2i, &log}; }
};

std::unique_ptr<BackendBundle> make_backends(const RunConfig& cfg,
                                             const std::filesystem::path& gen_dir) {
  auto b = std::make_unique<BackendBundle>();
  b->log.set_echo(cfg.echo_calls);
  if (cfg.mode == BackendMode::Mock) {
    b->mock_text = std::make_unique<MockTextEncoder>(
        cfg.mock_dim, static_cast<std::uint64_t>(cfg.seed), &b->log);
    b->mock_image = std::make_unique<MockImageEncoder>(cfg.mock_dim, 8, &b->log);
    b->mock_chat = std::make_unique<MockChatModel>(
        cfg.strict_mock_scripts ? MockChatModel::Mode::Scripted
                                : MockChatModel::Mode::ScriptedWithFallback,
        &b->log, cfg.chat.max_concurrency);
    if (!cfg.paths.mock_script.empty() &&
        std::filesystem::exists(cfg.paths.mock_script))
      b->mock_chat->load_script_file(cfg.paths.mock_script);
    b->mock_t2i = std::make_unique<MockImageGenerator>(
        gen_dir, cfg.t2i.image_size, &b->log, cfg.t2i.max_concurrency);
    b->text_cache = std::make_unique<CachingTextEncoder>(*b->mock_text);
    b->image_cache = std::make_unique<CachingImageEncoder>(*b->mock_image);
    b->chat = b->mock_chat.get();
    b->t2i = b->mock_t2i.get();
  } else {
    b->http_text = std::make_unique<HttpTextEncoder>(cfg.encoder, cfg.mock_dim,
                                                     "clip", HttpEnv::from_environment(),
                                                     &b->log);
    b->http_image = std::make_unique<HttpImageEncoder>(cfg.encoder, cfg.mock_dim,
                                                       "clip",
                                                       HttpEnv::from_environment(),
                                                       &b->log);
    b->http_chat = std::make_unique<HttpChatModel>(cfg.chat,
                                                   HttpEnv::from_environment(),
                                                   &b->log);
    b->http_t2i = std::make_unique<HttpImageGenerator>(cfg.t2i, gen_dir,
                                                       HttpEnv::from_environment(),
                                                       &b->log);
    b->text_cache = std::make_unique<CachingTextEncoder>(*b->http_text);
    b->image_cache = std::make_unique<CachingImageEncoder>(*b->http_image);
    b->chat = b->http_chat.get();
    b->t2i = b->http_t2i.get();
  }
  b->text = b->text_cache.get();
  b->image = b->image_cache.get();
  return b;
}

ExemplarStore load_or_build_store(const RunConfig& cfg, BackendBundle& backends) {
  if (std::filesystem::exists(cfg.paths.store_dir / "embeddings.jsonl"))
    return load_store(cfg.paths.store_dir);
  DatasetSplit exemplars =
      load_dataset(cfg.paths.exemplars, SplitKind::D_E, LoadMode::Strict);
  std::vector<Exemplar> resolved;
  const std::filesystem::path base = cfg.paths.exemplars.parent_path();
  for (const Exemplar& ex : exemplars.exemplars) {
    Exemplar r = ex;
    r.instance = with_resolved_image(ex.instance, base);
    resolved.push_back(std::move(r));
  }
  CallScope scope("store:build", "");
  ExemplarStore store = build_store(resolved, *backends.text, *backends.image);
  if (!cfg.paths.store_dir.empty()) save_store(store, cfg.paths.store_dir);
  return store;
}

ImageBank load_or_build_bank(const RunConfig& cfg, BackendBundle& backends,
                             const TemplateSet* templates) {
  if (std::filesystem::exists(cfg.paths.bank_dir / "bank_embeddings.jsonl"))
    return load_bank(cfg.paths.bank_dir);
  std::vector<BankSource> sources = load_bank_sources(cfg.paths.bank_manifest);
  CallScope scope("bank:build", "");
  ImageBank bank = build_image_bank(sources, *backends.image, *backends.text,
                                    backends.chat, templates);
  if (!cfg.paths.bank_dir.empty()) save_bank(bank, cfg.paths.bank_dir);
  return bank;
}

int finish_run(const RunResult& result) {
  std::printf("instances: %zu  generated: %zu  skipped: %zu  failed: %zu\n",
              result.outcomes.size(), result.generated(), result.skipped(),
              result.failed());
  std::printf("manifest: %s\n", result.manifest_path.string().c_str());
  return result.manifest.errors.empty() ? 0 : 2;
}

std::vector<double> parse_grid_spec(const std::string& spec) {
  double lo = 0, hi = 0, step = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
    throw Error(Err::ConfigError, "grid must look like lo:hi:step, got " + spec);
  return make_grid(lo, hi, step);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"question and visual-option generation pipeline"};
  app.require_subcommand(1);

  std::string config_file;
  std::string backend_mode;
  RunConfig cfg = default_run_config();
  bool have_alpha = false, have_beta = false, have_sigma = false;
  double alpha = 0.6, beta = 1.4, sigma = 0.8;
  int max_rounds = -1, candidates = -1, options_count = -1, parallelism = -1;
  long long seed = -1;
  bool seed_set = false;

  app.add_option("--config", config_file, "JSON config file");
  app.add_option("--backend", backend_mode, "mock|http")
      ->check(CLI::IsMember({"mock", "http"}));
  app.add_option("--alpha", alpha, "internal-consistency weight (default 0.6)")
      ->each([&](const std::string&) { have_alpha = true; });
  app.add_option("--beta", beta, "image-description weight (default 1.4)")
      ->each([&](const std::string&) { have_beta = true; });
  app.add_option("--sigma", sigma, "acceptance threshold (default 0.8)")
      ->each([&](const std::string&) { have_sigma = true; });
  app.add_option("--max-rounds", max_rounds, "tuning rounds after the first attempt (default 3)");
  app.add_option("--candidates", candidates, "question-reason candidates m (default 3)");
  app.add_option("--options", options_count, "option count t (default 4)");
  app.add_option("--seed", seed, "master seed (default 42)")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--parallelism", parallelism, "instance-level workers");
  bool echo_calls = false;
  app.add_flag("--log-calls", echo_calls, "log one line per backend call");

  // --- build-exemplars ---
  auto* cmd_build_ex = app.add_subcommand(
      "build-exemplars", "embed exemplar records into a retrieval store");
  std::string bx_input, bx_store = "out/store", bx_templates = "assets/templates";
  bool bx_construct = false;
  cmd_build_ex->add_option("--input", bx_input, "exemplar records (JSONL)")->required();
  cmd_build_ex->add_option("--store-dir", bx_store, "output store directory");
  cmd_build_ex->add_option("--templates", bx_templates, "prompt template directory");
  cmd_build_ex->add_flag("--construct", bx_construct,
                         "records are raw instances; judge them via the chat model");

  // --- build-bank ---
  auto* cmd_build_bank =
      app.add_subcommand("build-bank", "embed an image bank for template retrieval");
  std::string bb_manifest, bb_dir = "out/bank", bb_templates = "assets/templates";
  cmd_build_bank->add_option("--manifest", bb_manifest, "bank manifest (JSONL)")->required();
  cmd_build_bank->add_option("--bank-dir", bb_dir, "output bank directory");
  cmd_build_bank->add_option("--templates", bb_templates, "prompt template directory");

  // --- discriminate ---
  auto* cmd_disc = app.add_subcommand("discriminate",
                                      "stage (a) only: judge convertibility");
  std::string d_dataset, d_store = "out/store", d_templates = "assets/templates",
              d_out, d_script;
  cmd_disc->add_option("--dataset", d_dataset, "instances (JSONL)")->required();
  cmd_disc->add_option("--store-dir", d_store, "exemplar store directory");
  cmd_disc->add_option("--templates", d_templates, "prompt template directory");
  cmd_disc->add_option("--out", d_out, "write judgments JSONL here");
  cmd_disc->add_option("--mock-script", d_script, "scripted mock replies");

  // --- generate ---
  auto* cmd_gen = app.add_subcommand("generate", "run the full pipeline");
  std::string g_dataset, g_exemplars, g_store = "out/store", g_bank_manifest,
              g_bank = "out/bank", g_templates = "assets/templates",
              g_out = "out/run", g_script;
  cmd_gen->add_option("--dataset", g_dataset, "instances (JSONL)")->required();
  cmd_gen->add_option("--exemplars", g_exemplars, "exemplar records (JSONL)");
  cmd_gen->add_option("--store-dir", g_store, "exemplar store directory");
  cmd_gen->add_option("--bank-manifest", g_bank_manifest, "image bank manifest");
  cmd_gen->add_option("--bank-dir", g_bank, "image bank directory");
  cmd_gen->add_option("--templates", g_templates, "prompt template directory");
  cmd_gen->add_option("--out", g_out, "output bundle directory");
  cmd_gen->add_option("--mock-script", g_script, "scripted mock replies");

  // --- evaluate ---
  auto* cmd_eval = app.add_subcommand("evaluate", "score a bundle directory");
  std::string e_bundle, e_refs, e_out;
  cmd_eval->add_option("--bundle", e_bundle, "bundle directory")->required();
  cmd_eval->add_option("--references", e_refs, "reference questions (JSONL)");
  cmd_eval->add_option("--out", e_out, "write the JSON report here");

  // --- sweep ---
  auto* cmd_sweep = app.add_subcommand("sweep", "hyperparameter sweep");
  std::string s_param, s_audit, s_refs, s_bank = "out/bank", s_options,
              s_grid, s_out, s_templates = "assets/templates",
              s_work = "out/sweep";
  cmd_sweep->add_option("--param", s_param, "alpha|beta")
      ->required()
      ->check(CLI::IsMember({"alpha", "beta"}));
  cmd_sweep->add_option("--audit", s_audit, "bundle dir or audit JSONL (alpha)");
  cmd_sweep->add_option("--references", s_refs, "reference questions JSONL (alpha)");
  cmd_sweep->add_option("--bank-dir", s_bank, "image bank directory (beta)");
  cmd_sweep->add_option("--options-file", s_options, "option descriptions JSONL (beta)");
  cmd_sweep->add_option("--grid", s_grid, "lo:hi:step (defaults per param)");
  cmd_sweep->add_option("--templates", s_templates, "prompt template directory");
  cmd_sweep->add_option("--work-dir", s_work, "scratch directory (beta)");
  cmd_sweep->add_option("--out", s_out, "write the JSON report here");

  // --- demo ---
  auto* cmd_demo = app.add_subcommand(
      "demo", "end-to-end run on the shipped fixtures with mock backends");
  std::string demo_fixtures = "fixtures", demo_templates = "assets/templates",
              demo_out = "out/demo";
  cmd_demo->add_option("--fixtures", demo_fixtures, "fixture directory");
  cmd_demo->add_option("--templates", demo_templates, "prompt template directory");
  cmd_demo->add_option("--out", demo_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_file.empty()) cfg = load_run_config(config_file);
    if (!backend_mode.empty())
      cfg.mode = backend_mode == "http" ? BackendMode::Http : BackendMode::Mock;
    if (have_alpha) cfg.oqrm.alpha = alpha;
    if (have_beta) cfg.tune.beta = beta;
    if (have_sigma) cfg.tune.sigma = sigma;
    if (max_rounds >= 0) cfg.tune.max_rounds = max_rounds;
    if (candidates > 0) cfg.oqrm.m = candidates;
    if (options_count > 0) cfg.tune.t = options_count;
    if (seed_set) cfg.seed = seed;
    if (parallelism > 0) cfg.parallelism = parallelism;
    if (echo_calls) cfg.echo_calls = true;

    if (cmd_build_ex->parsed()) {
      cfg.paths.exemplars = bx_input;
      cfg.paths.store_dir = bx_store;
      cfg.paths.templates_dir = bx_templates;
      auto backends = make_backends(cfg, cfg.paths.store_dir / "gen");
      if (bx_construct) {
        TemplateSet templates = TemplateSet::load(cfg.paths.templates_dir);
        DatasetSplit raw = load_dataset(bx_input, SplitKind::Custom, LoadMode::Strict);
        std::vector<Exemplar> built;
        const std::filesystem::path base = cfg.paths.exemplars.parent_path();
        for (const ContentInstance& s : raw.instances) {
          CallScope scope("construct", s.id);
          built.push_back(construct_exemplar(with_resolved_image(s, base),
                                             std::nullopt, *backends->chat,
                                             templates));
        }
        ExemplarStore store = build_store(built, *backends->text, *backends->image);
        save_store(store, cfg.paths.store_dir);
        std::printf("constructed %zu exemplars -> %s\n", store.size(),
                    bx_store.c_str());
      } else {
        ExemplarStore store = load_or_build_store(cfg, *backends);
        std::printf("store of %zu exemplars -> %s\n", store.size(), bx_store.c_str());
      }
      return 0;
    }

    if (cmd_build_bank->parsed()) {
      cfg.paths.bank_manifest = bb_manifest;
      cfg.paths.bank_dir = bb_dir;
      cfg.paths.templates_dir = bb_templates;
      auto backends = make_backends(cfg, cfg.paths.bank_dir / "gen");
      TemplateSet templates = TemplateSet::load(cfg.paths.templates_dir);
      ImageBank bank = load_or_build_bank(cfg, *backends, &templates);
      std::printf("bank of %zu items -> %s\n", bank.items.size(), bb_dir.c_str());
      return 0;
    }

    if (cmd_disc->parsed()) {
      cfg.paths.dataset = d_dataset;
      cfg.paths.store_dir = d_store;
      cfg.paths.templates_dir = d_templates;
      if (!d_script.empty()) cfg.paths.mock_script = d_script;
      auto backends = make_backends(cfg, "out/gen");
      TemplateSet templates = TemplateSet::load(cfg.paths.templates_dir);
      ExemplarStore store = load_store(cfg.paths.store_dir);
      DatasetSplit split = load_dataset(d_dataset, SplitKind::D_C, LoadMode::Strict);
      const std::filesystem::path base = cfg.paths.dataset.parent_path();
      nlohmann::json lines = nlohmann::json::array();
      std::size_t convertible = 0;
      for (const ContentInstance& raw : split.instances) {
        ContentInstance s = with_resolved_image(raw, base);
        CallScope scope("a:discriminate", s.id);
        QueryEmbeddings q = embed_instance(s, *backends->text, *backends->image);
        DiscriminationResult r =
            discriminate(s, store, q, *backends->chat, templates);
        if (r.judgment.convertible) ++convertible;
        lines.push_back({{"id", s.id},
                         {"convertible", r.judgment.convertible},
                         {"reason", r.judgment.reason},
                         {"template_version", r.template_version}});
      }
      if (!d_out.empty()) {
        std::string body;
        for (const auto& l : lines) body += l.dump() + "\n";
        write_text_file(d_out, body);
      }
      std::printf("%zu/%zu convertible\n", convertible, split.instances.size());
      return 0;
    }

    if (cmd_gen->parsed()) {
      cfg.paths.dataset = g_dataset;
      if (!g_exemplars.empty()) cfg.paths.exemplars = g_exemplars;
      cfg.paths.store_dir = g_store;
      if (!g_bank_manifest.empty()) cfg.paths.bank_manifest = g_bank_manifest;
      cfg.paths.bank_dir = g_bank;
      cfg.paths.templates_dir = g_templates;
      cfg.paths.out_dir = g_out;
      if (!g_script.empty()) cfg.paths.mock_script = g_script;
      auto backends = make_backends(cfg, cfg.paths.out_dir / "gen");
      TemplateSet templates = TemplateSet::load(cfg.paths.templates_dir);
      ExemplarStore store = load_or_build_store(cfg, *backends);
      ImageBank bank = load_or_build_bank(cfg, *backends, &templates);
      DatasetSplit split = load_dataset(g_dataset, SplitKind::D_Q, LoadMode::Strict);
      PipelineBackends view = backends->view();
      RunResult result = run_pipeline(cfg, split, store, bank, view);
      return finish_run(result);
    }

    if (cmd_eval->parsed()) {
      std::vector<QuestionBundle> bundles = load_bundles(e_bundle);
      std::map<std::string, std::string> refs;
      if (!e_refs.empty()) refs = load_question_refs(e_refs);
      auto backends = make_backends(cfg, "out/gen");
      ScoreReport report = evaluate_bundles(bundles, refs, e_bundle,
                                            backends->image, backends->text);
      std::printf("%s", report.to_table().c_str());
      if (!e_out.empty()) write_text_file(e_out, report.to_json().dump(2) + "\n");
      return 0;
    }

    if (cmd_sweep->parsed()) {
      SweepReport report;
      if (s_param == "alpha") {
        if (s_audit.empty() || s_refs.empty())
          throw Error(Err::ConfigError, "alpha sweep needs --audit and --references");
        std::vector<double> grid =
            s_grid.empty() ? make_grid(0.1, 1.2, 0.1) : parse_grid_spec(s_grid);
        report = sweep_alpha(load_alpha_audits(s_audit),
                             load_question_refs(s_refs), grid);
      } else {
        if (s_options.empty())
          throw Error(Err::ConfigError, "beta sweep needs --options-file");
        std::vector<double> grid =
            s_grid.empty() ? make_grid(0.4, 1.8, 0.2) : parse_grid_spec(s_grid);
        cfg.paths.templates_dir = s_templates;
        auto backends = make_backends(cfg, std::filesystem::path(s_work) / "gen");
        TemplateSet templates = TemplateSet::load(cfg.paths.templates_dir);
        ImageBank bank = load_bank(s_bank);
        report = sweep_beta(bank, load_beta_options(s_options), cfg.tune,
                            *backends->chat, *backends->t2i, *backends->text,
                            *backends->image, templates, cfg.seed, grid);
      }
      std::printf("%s", report.to_table().c_str());
      if (!s_out.empty()) write_text_file(s_out, report.to_json().dump(2) + "\n");
      return 0;
    }

    if (cmd_demo->parsed()) {
      std::filesystem::path fixtures = demo_fixtures;
      cfg.paths.dataset = fixtures / "instances.jsonl";
      cfg.paths.exemplars = fixtures / "exemplars.jsonl";
      cfg.paths.bank_manifest = fixtures / "bank" / "bank.jsonl";
      cfg.paths.mock_script = fixtures / "scripts" / "demo_chat.json";
      cfg.paths.templates_dir = demo_templates;
      cfg.paths.out_dir = demo_out;
      cfg.paths.store_dir = std::filesystem::path(demo_out) / "store";
      cfg.paths.bank_dir = std::filesystem::path(demo_out) / "bank";
      cfg.mode = BackendMode::Mock;
      auto backends = make_backends(cfg, cfg.paths.out_dir / "gen");
      TemplateSet templates = TemplateSet::load(cfg.paths.templates_dir);
      ExemplarStore store = load_or_build_store(cfg, *backends);
      ImageBank bank = load_or_build_bank(cfg, *backends, &templates);
      DatasetSplit split =
          load_dataset(cfg.paths.dataset, SplitKind::D_Q, LoadMode::Strict);
      PipelineBackends view = backends->view();
      RunResult result = run_pipeline(cfg, split, store, bank, view);
      return finish_run(result);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
