#include "cmos/exemplar_store.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "cmos/dataset.hpp"
#include "cmos/errors.hpp"

namespace cmos {

using nlohmann::json;

std::string resolve_image_ref(const std::filesystem::path& base,
                              const std::string& ref) {
  std::filesystem::path p(ref);
  if (p.is_absolute() || base.empty()) return ref;
  return (base / p).string();
}

ContentInstance with_resolved_image(const ContentInstance& s,
                                    const std::filesystem::path& base) {
  ContentInstance out = s;
  if (out.image_ref) out.image_ref = resolve_image_ref(base, *out.image_ref);
  return out;
}

ExemplarStore build_store(std::span<const Exemplar> exemplars,
                          TextEncoder& text_enc, ImageEncoder& image_enc) {
  if (exemplars.empty())
    throw Error(Err::EmptyInput, "build_store over no exemplars");
  ExemplarStore store;
  store.text_encoder_id = text_enc.encoder_id();
  store.image_encoder_id = image_enc.encoder_id();
  store.entries.reserve(exemplars.size());
  for (const Exemplar& ex : exemplars) {
    try {
      StoreEntry entry;
      entry.exemplar = ex;
      entry.v_text = text_enc.embed_text(ex.instance.context);
      entry.v_answer = text_enc.embed_text(ex.instance.answer);
      if (ex.instance.image_ref)
        entry.v_image = image_enc.embed_image(*ex.instance.image_ref);
      store.entries.push_back(std::move(entry));
    } catch (const Error& e) {
      throw Error(Err::EncoderFailure,
                  "entry '" + ex.instance.id + "': " + e.what());
    }
  }
  return store;
}

namespace {

json embedding_to_json(const Embedding& e) {
  return json{{"encoder_id", e.encoder_id}, {"values", e.values}};
}

Embedding embedding_from_json(const json& j) {
  Embedding e;
  e.encoder_id = j.at("encoder_id").get<std::string>();
  e.values = j.at("values").get<std::vector<double>>();
  if (!e.all_finite())
    throw Error(Err::SchemaViolation, "non-finite embedding values");
  return e;
}

}  // namespace

void save_store(const ExemplarStore& store, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  DatasetSplit split;
  split.kind = SplitKind::D_E;
  split.name = split_name(SplitKind::D_E);
  for (const StoreEntry& e : store.entries) split.exemplars.push_back(e.exemplar);
  save_dataset(split, dir / "exemplars.jsonl");

  std::ofstream out(dir / "embeddings.jsonl", std::ios::trunc);
  if (!out) throw Error(Err::IoError, "cannot write store embeddings");
  out << json{{"text_encoder_id", store.text_encoder_id},
              {"image_encoder_id", store.image_encoder_id}}
             .dump()
      << "\n";
  for (const StoreEntry& e : store.entries) {
    json j{{"id", e.exemplar.instance.id},
           {"v_text", embedding_to_json(e.v_text)},
           {"v_answer", embedding_to_json(e.v_answer)}};
    if (e.v_image) j["v_image"] = embedding_to_json(*e.v_image);
    out << j.dump() << "\n";
  }
}

ExemplarStore load_store(const std::filesystem::path& dir) {
  DatasetSplit split = load_dataset(dir / "exemplars.jsonl", SplitKind::D_E,
                                    LoadMode::Lenient);
  std::ifstream in(dir / "embeddings.jsonl");
  if (!in) throw Error(Err::FileNotFound, (dir / "embeddings.jsonl").string());

  ExemplarStore store;
  std::string line;
  if (!std::getline(in, line))
    throw Error(Err::SchemaViolation, "empty store embedding sidecar");
  json header = json::parse(line);
  store.text_encoder_id = header.at("text_encoder_id").get<std::string>();
  store.image_encoder_id = header.at("image_encoder_id").get<std::string>();

  std::map<std::string, Exemplar> by_id;
  for (const Exemplar& ex : split.exemplars) by_id[ex.instance.id] = ex;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    std::string id = j.at("id").get<std::string>();
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw Error(Err::SchemaViolation,
                  "embedding sidecar references unknown exemplar '" + id + "'");
    StoreEntry entry;
    entry.exemplar = it->second;
    entry.v_text = embedding_from_json(j.at("v_text"));
    entry.v_answer = embedding_from_json(j.at("v_answer"));
    if (j.contains("v_image")) entry.v_image = embedding_from_json(j.at("v_image"));
    store.entries.push_back(std::move(entry));
  }
  if (store.entries.size() != split.exemplars.size())
    throw Error(Err::SchemaViolation, "store sidecar is missing embeddings");
  return store;
}

QueryEmbeddings embed_instance(const ContentInstance& s, TextEncoder& text_enc,
                               ImageEncoder& image_enc) {
  QueryEmbeddings q;
  q.v_text = text_enc.embed_text(s.context);
  q.v_answer = text_enc.embed_text(s.answer);
  if (s.image_ref) q.v_image = image_enc.embed_image(*s.image_ref);
  return q;
}

const char* modality_label(RetrievalModality m) {
  switch (m) {
    case RetrievalModality::Text: return "text";
    case RetrievalModality::Answer: return "answer";
    case RetrievalModality::Image: return "image";
  }
  return "text";
}

namespace {

void check_query(const ExemplarStore& store, const QueryEmbeddings& q) {
  if (store.empty()) throw Error(Err::EmptyStore, "retrieval over empty store");
  if (q.v_text.encoder_id != store.text_encoder_id ||
      (q.v_image && q.v_image->encoder_id != store.image_encoder_id))
    throw Error(Err::EncoderMismatch,
                "query encoded with '" + q.v_text.encoder_id +
                    "' but store carries '" + store.text_encoder_id + "'");
}

// Best modality for one entry, or nullopt if no modality is comparable.
std::optional<std::pair<double, RetrievalModality>> entry_score(
    const StoreEntry& entry, const QueryEmbeddings& q) {
  std::optional<std::pair<double, RetrievalModality>> best;
  auto consider = [&](double score, RetrievalModality m) {
    if (!best || score > best->first) best = {score, m};
  };
  consider(cosine(entry.v_text, q.v_text), RetrievalModality::Text);
  consider(cosine(entry.v_answer, q.v_answer), RetrievalModality::Answer);
  if (entry.v_image && q.v_image)
    consider(cosine(*entry.v_image, *q.v_image), RetrievalModality::Image);
  return best;
}

}  // namespace

RetrievalHit retrieve_best(const ExemplarStore& store, const QueryEmbeddings& q) {
  check_query(store, q);
  std::optional<RetrievalHit> best;
  for (std::size_t j = 0; j < store.entries.size(); ++j) {
    auto scored = entry_score(store.entries[j], q);
    if (!scored) continue;
    if (!best || scored->first > best->score)
      best = RetrievalHit{j, scored->first, scored->second};
  }
  if (!best) throw Error(Err::EmptyStore, "no comparable store entries");
  return *best;
}

RetrievalHit retrieve_best(const ExemplarStore& store, const ContentInstance& s,
                           TextEncoder& text_enc, ImageEncoder& image_enc) {
  return retrieve_best(store, embed_instance(s, text_enc, image_enc));
}

std::vector<RetrievalHit> retrieve_top_k(const ExemplarStore& store,
                                         const QueryEmbeddings& q,
                                         std::size_t k) {
  check_query(store, q);
  std::vector<RetrievalHit> hits;
  for (std::size_t j = 0; j < store.entries.size(); ++j) {
    auto scored = entry_score(store.entries[j], q);
    if (scored) hits.push_back({j, scored->first, scored->second});
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const RetrievalHit& a, const RetrievalHit& b) {
                     return a.score > b.score;
                   });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

}  // namespace cmos
