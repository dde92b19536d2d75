#include "cmos/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <thread>

#include "cmos/discrimination.hpp"
#include "cmos/errors.hpp"
#include "cmos/ssim.hpp"
#include "cmos/text_metrics.hpp"
#include "cmos/util.hpp"

namespace cmos {

std::size_t RunResult::generated() const {
  std::size_t n = 0;
  for (const auto& o : outcomes)
    if (o.status == InstanceOutcome::Status::Generated) ++n;
  return n;
}

std::size_t RunResult::skipped() const {
  std::size_t n = 0;
  for (const auto& o : outcomes)
    if (o.status == InstanceOutcome::Status::SkippedNonConvertible) ++n;
  return n;
}

std::size_t RunResult::failed() const {
  std::size_t n = 0;
  for (const auto& o : outcomes)
    if (o.status == InstanceOutcome::Status::Failed) ++n;
  return n;
}

namespace {

InstanceOutcome process_instance(const RunConfig& cfg,
                                 const ContentInstance& raw,
                                 const std::filesystem::path& dataset_base,
                                 const ExemplarStore& store, const ImageBank& bank,
                                 const TemplateSet& templates,
                                 PipelineBackends& backends) {
  InstanceOutcome out;
  out.id = raw.id;
  std::string stage = "a:retrieve";
  try {
    ContentInstance s = with_resolved_image(raw, dataset_base);

    QueryEmbeddings query;
    {
      CallScope scope(stage, s.id);
      query = embed_instance(s, backends.text_enc, backends.image_enc);
    }

    stage = "a:discriminate";
    DiscriminationResult disc;
    {
      CallScope scope(stage, s.id);
      disc = discriminate(s, store, query, backends.chat, templates);
    }
    if (!disc.judgment.convertible) {
      out.status = InstanceOutcome::Status::SkippedNonConvertible;
      return out;
    }

    stage = "b:qgen";
    QgenOutcome qgen;
    {
      CallScope scope(stage, s.id);
      qgen = generate_candidates(s, disc.judgment, store, query, backends.chat,
                                 backends.text_enc, templates, cfg.oqrm.m);
    }

    stage = "c:select";
    QuestionBundle bundle;
    {
      CallScope scope(stage, s.id);
      bundle.v_p = backends.text_enc.embed_text(photo_phrase(cfg.oqrm, s.answer));
      bundle.v_i = query.v_image;
      bundle.selection = select_optimal(std::move(qgen.candidates), cfg.oqrm,
                                        bundle.v_i, bundle.v_p);
    }

    stage = "d:optgen";
    {
      CallScope scope(stage, s.id);
      const Exemplar& retrieved = store.entries[disc.retrieved.index].exemplar;
      bundle.options = generate_options(bundle.selection.winner(), s,
                                        retrieved, backends.chat, templates,
                                        cfg.tune.t);
    }

    stage = "d:template";
    {
      CallScope scope(stage, s.id);
      for (OptionCandidate& opt : bundle.options) {
        TemplateHit hit = retrieve_template(bank, opt.description, cfg.tune.beta,
                                            backends.text_enc);
        const ImageBankItem& item = bank.items[hit.index];
        opt.template_ref =
            TemplateRef{item.id, item.image_ref, item.caption, hit.score};
      }
    }

    stage = "d:synthesize";
    {
      CallScope scope(stage, s.id);
      for (OptionCandidate& opt : bundle.options)
        synthesize_visual(opt, cfg.tune, backends.chat, backends.t2i, templates,
                          cfg.seed);
    }

    bundle.instance = raw;  // keep the unresolved record for round-trips
    bundle.judgment = disc.judgment;
    bundle.template_version = templates.combined_version();
    out.bundle = std::move(bundle);
    out.status = InstanceOutcome::Status::Generated;
    return out;
  } catch (const Error& e) {
    out.status = InstanceOutcome::Status::Failed;
    out.stage = stage;
    out.error = e.what();
    return out;
  }
}

}  // namespace

RunResult run_pipeline(const RunConfig& cfg, const DatasetSplit& split,
                       const ExemplarStore& store, const ImageBank& bank,
                       PipelineBackends& backends) {
  cfg.validate();
  TemplateSet templates = TemplateSet::load(cfg.paths.templates_dir);
  const std::filesystem::path dataset_base = cfg.paths.dataset.parent_path();

  const std::vector<ContentInstance>& instances = split.instances;
  RunResult result;
  result.outcomes.resize(instances.size());

  const int workers = std::max(
      1, std::min<int>(cfg.parallelism, static_cast<int>(instances.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < instances.size(); ++i)
      result.outcomes[i] = process_instance(cfg, instances[i], dataset_base,
                                            store, bank, templates, backends);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= instances.size()) return;
          result.outcomes[i] = process_instance(
              cfg, instances[i], dataset_base, store, bank, templates, backends);
        }
      });
    }
    for (std::thread& th : pool) th.join();
  }

  std::vector<QuestionBundle> bundles;
  std::vector<ItemError> errors;
  std::vector<std::string> skipped;
  for (const InstanceOutcome& o : result.outcomes) {
    switch (o.status) {
      case InstanceOutcome::Status::Generated:
        bundles.push_back(*o.bundle);
        break;
      case InstanceOutcome::Status::SkippedNonConvertible:
        skipped.push_back(o.id);
        break;
      case InstanceOutcome::Status::Failed:
        errors.push_back({o.id, o.stage, o.error});
        break;
    }
  }

  result.manifest =
      save_artifacts(bundles, cfg.paths.out_dir, cfg.fingerprint(), cfg.seed,
                     std::move(errors), std::move(skipped), instances.size());
  result.manifest_path = cfg.paths.out_dir / "manifest.json";
  return result;
}

std::map<std::string, std::string> load_question_refs(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Err::FileNotFound, path.string());
  std::map<std::string, std::string> refs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    refs[j.at("id").get<std::string>()] = j.at("question").get<std::string>();
  }
  return refs;
}

ScoreReport evaluate_bundles(const std::vector<QuestionBundle>& bundles,
                             const std::map<std::string, std::string>& question_refs,
                             const std::filesystem::path& bundle_dir,
                             ImageEncoder* image_enc, TextEncoder* text_enc) {
  std::vector<ItemScores> items;
  std::vector<std::string> corpus;
  bool any_ref = false;

  for (const QuestionBundle& bundle : bundles) {
    ItemScores row;
    row.id = bundle.instance.id;
    row.subject = bundle.instance.subject;
    row.modality = bundle.instance.modality();
    row.grade = bundle.instance.grade;
    corpus.push_back(bundle.winner().question);

    if (auto it = question_refs.find(row.id); it != question_refs.end()) {
      any_ref = true;
      std::vector<std::string> refs{it->second};
      row.values["bleu4"] = bleu4(bundle.winner().question, refs);
      row.values["rouge_l"] = rouge_l(bundle.winner().question, it->second);
      row.values["meteor_simplified"] =
          meteor_simplified(bundle.winner().question, it->second);
    }

    // Image metrics over each option's selected attempt.
    std::vector<std::filesystem::path> images;
    bool complete = !bundle.options.empty();
    for (const OptionCandidate& opt : bundle.options) {
      if (opt.attempts.empty()) {
        complete = false;
        break;
      }
      std::filesystem::path p = opt.attempts[opt.selected_attempt].image_ref;
      if (p.is_relative()) p = bundle_dir / p;
      if (!std::filesystem::exists(p)) {
        complete = false;
        break;
      }
      images.push_back(p);
    }
    if (complete && images.size() >= 2) {
      double total = 0.0;
      int pairs = 0;
      for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j) {
          total += ssim_files(images[i], images[j]);
          ++pairs;
        }
      row.values["ssim_options"] = total / pairs;
    }
    if (complete && image_enc && text_enc) {
      double total = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < bundle.options.size(); ++i) {
        total += clip_t(images[i].string(), bundle.options[i].description,
                        *image_enc, *text_enc);
        ++n;
      }
      if (n > 0) row.values["clip_t"] = total / n;
    }
    items.push_back(std::move(row));
  }

  if (!question_refs.empty() && !any_ref && !bundles.empty())
    throw Error(Err::IdMismatch,
                "no reference id matches any bundle instance id");

  ScoreReport report = build_report(std::move(items));
  // Corpus-level diversity lands on the ALL row only.
  for (auto& agg : report.aggregates) {
    if (agg.slice != "ALL" || corpus.empty()) continue;
    for (int n = 1; n <= 4; ++n)
      agg.mean["distinct_" + std::to_string(n)] =
          distinct_n(corpus, n);
  }
  return report;
}

}  // namespace cmos
