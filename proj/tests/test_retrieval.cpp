#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <optional>
#include <random>

#include "cmos/errors.hpp"
#include "cmos/exemplar_store.hpp"
#include "cmos/image.hpp"
#include "cmos/mock_backends.hpp"

using namespace cmos;
namespace fs = std::filesystem;

namespace {

constexpr const char* kEnc = "enc@space";

Embedding vec(std::vector<double> v) { return {std::move(v), kEnc}; }

Exemplar make_exemplar(const std::string& id) {
  Exemplar ex;
  ex.instance.id = id;
  ex.instance.context = "context of " + id;
  ex.instance.answer = "answer of " + id;
  ex.convertible = true;
  ex.reason = "reason of " + id;
  return ex;
}

StoreEntry make_entry(const std::string& id, std::vector<double> vt,
                      std::vector<double> va,
                      std::optional<std::vector<double>> vi = std::nullopt) {
  StoreEntry e;
  e.exemplar = make_exemplar(id);
  e.v_text = vec(std::move(vt));
  e.v_answer = vec(std::move(va));
  if (vi) e.v_image = vec(std::move(*vi));
  return e;
}

ExemplarStore hand_store(std::vector<StoreEntry> entries) {
  ExemplarStore store;
  store.text_encoder_id = kEnc;
  store.image_encoder_id = kEnc;
  store.entries = std::move(entries);
  return store;
}

// Independent oracle: plain double loop over entries and modalities with its
// own cosine arithmetic.
double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::size_t oracle_best(const ExemplarStore& store, const QueryEmbeddings& q) {
  std::size_t best = 0;
  double best_score = -1e300;
  for (std::size_t j = 0; j < store.entries.size(); ++j) {
    const StoreEntry& e = store.entries[j];
    double score = std::max(oracle_cosine(e.v_text.values, q.v_text.values),
                            oracle_cosine(e.v_answer.values, q.v_answer.values));
    if (e.v_image && q.v_image)
      score = std::max(score, oracle_cosine(e.v_image->values, q.v_image->values));
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

std::vector<double> random_nonzero(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> dist;
  std::vector<double> v(dim);
  double norm;
  do {
    norm = 0;
    for (double& x : v) {
      x = dist(rng);
      norm += x * x;
    }
  } while (norm < 1e-12);
  return v;
}

}  // namespace

TEST_CASE("build_store embeds text, answer, and image-if-present") {
  fs::path dir = fs::temp_directory_path() / "cmos_retrieval_build";
  fs::create_directories(dir);
  save_pgm(procedural_image(3, 16, 16), dir / "ex.pgm");

  MockTextEncoder text_enc(64);
  MockImageEncoder image_enc(64);

  Exemplar no_image = make_exemplar("plain");
  Exemplar with_image = make_exemplar("pictured");
  with_image.instance.image_ref = (dir / "ex.pgm").string();

  ExemplarStore store =
      build_store(std::vector<Exemplar>{no_image, with_image}, text_enc, image_enc);
  CHECK(store.size() == 2);
  CHECK_FALSE(store.entries[0].v_image.has_value());
  CHECK(store.entries[1].v_image.has_value());

  // failure names the entry id and nothing is persisted
  Exemplar broken = make_exemplar("broken");
  broken.instance.image_ref = (dir / "missing.pgm").string();
  try {
    build_store(std::vector<Exemplar>{no_image, broken}, text_enc, image_enc);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::EncoderFailure);
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }

  CHECK_THROWS_AS(build_store(std::vector<Exemplar>{}, text_enc, image_enc), Error);
}

TEST_CASE("store persistence round trip") {
  fs::path dir = fs::temp_directory_path() / "cmos_retrieval_persist";
  fs::remove_all(dir);
  MockTextEncoder text_enc(32);
  MockImageEncoder image_enc(32);
  ExemplarStore store = build_store(
      std::vector<Exemplar>{make_exemplar("s1"), make_exemplar("s2")}, text_enc,
      image_enc);
  save_store(store, dir);
  ExemplarStore back = load_store(dir);
  REQUIRE(back.size() == store.size());
  CHECK(back.text_encoder_id == store.text_encoder_id);
  CHECK(back.entries[0].v_text.values == store.entries[0].v_text.values);
  CHECK(back.entries[1].exemplar.instance.id == "s2");
}

TEST_CASE("self-retrieval returns the identical exemplar at score 1") {
  ExemplarStore store = hand_store({
      make_entry("e0", {1, 0, 0, 0}, {0, 1, 0, 0}),
      make_entry("e1", {0, 0, 1, 0}, {0, 0, 0, 1}),
  });
  QueryEmbeddings q{store.entries[1].v_text, store.entries[1].v_answer,
                    std::nullopt};
  RetrievalHit hit = retrieve_best(store, q);
  CHECK(hit.index == 1);
  CHECK(hit.score == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("three hand exemplars match the 3x3 grid argmax") {
  // text/answer vectors chosen so entry 2 wins through the answer modality
  ExemplarStore store = hand_store({
      make_entry("e0", {1, 0, 0, 0}, {0.5, 0.5, 0, 0}),
      make_entry("e1", {0.9, 0.1, 0, 0}, {0, 0, 1, 0}),
      make_entry("e2", {0, 1, 0, 0}, {0.1, 0, 0, 0.9}),
  });
  QueryEmbeddings q{vec({0.3, 0.2, 0, 0}), vec({0.1, 0, 0, 1}), std::nullopt};
  std::size_t expect = oracle_best(store, q);
  RetrievalHit hit = retrieve_best(store, q);
  CHECK(hit.index == expect);
  CHECK(hit.index == 2);
  CHECK(hit.modality == RetrievalModality::Answer);
}

TEST_CASE("ties break to the lowest entry index") {
  ExemplarStore store = hand_store({
      make_entry("e0", {1, 0}, {1, 0}),
      make_entry("e1", {1, 0}, {1, 0}),  // identical scores
  });
  QueryEmbeddings q{vec({1, 0}), vec({1, 0}), std::nullopt};
  CHECK(retrieve_best(store, q).index == 0);
}

TEST_CASE("empty store and encoder mismatch are rejected") {
  ExemplarStore store = hand_store({});
  QueryEmbeddings q{vec({1, 0}), vec({1, 0}), std::nullopt};
  CHECK_THROWS_AS(retrieve_best(store, q), Error);

  ExemplarStore other = hand_store({make_entry("e0", {1, 0}, {0, 1})});
  other.text_encoder_id = "other@space";
  try {
    retrieve_best(other, q);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == Err::EncoderMismatch);
  }
}

TEST_CASE("randomized stores agree with the exhaustive oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size_dist(1, 50);
  std::uniform_int_distribution<std::size_t> dim_dist(2, 16);
  std::uniform_int_distribution<int> image_dist(0, 3);

  for (int round = 0; round < 150; ++round) {
    std::size_t n = size_dist(rng);
    std::size_t dim = dim_dist(rng);
    std::vector<StoreEntry> entries;
    for (std::size_t j = 0; j < n; ++j) {
      StoreEntry e = make_entry("r" + std::to_string(j), random_nonzero(rng, dim),
                                random_nonzero(rng, dim));
      if (image_dist(rng) == 0) e.v_image = vec(random_nonzero(rng, dim));
      entries.push_back(std::move(e));
    }
    ExemplarStore store = hand_store(std::move(entries));
    QueryEmbeddings q{vec(random_nonzero(rng, dim)), vec(random_nonzero(rng, dim)),
                      image_dist(rng) != 0
                          ? std::optional<Embedding>(vec(random_nonzero(rng, dim)))
                          : std::nullopt};
    CHECK(retrieve_best(store, q).index == oracle_best(store, q));
  }
}

TEST_CASE("positive scaling of stored vectors keeps the selected index") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> scale_dist(1e-2, 1e2);
  for (int round = 0; round < 50; ++round) {
    std::vector<StoreEntry> entries;
    for (int j = 0; j < 10; ++j)
      entries.push_back(make_entry("s" + std::to_string(j),
                                   random_nonzero(rng, 8), random_nonzero(rng, 8)));
    ExemplarStore store = hand_store(std::move(entries));
    QueryEmbeddings q{vec(random_nonzero(rng, 8)), vec(random_nonzero(rng, 8)),
                      std::nullopt};
    std::size_t before = retrieve_best(store, q).index;

    double s = scale_dist(rng);
    for (StoreEntry& e : store.entries) {
      for (double& x : e.v_text.values) x *= s;
      for (double& x : e.v_answer.values) x *= s;
    }
    CHECK(retrieve_best(store, q).index == before);
  }
}

TEST_CASE("removing the winner can only lower the best score") {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 50; ++round) {
    std::vector<StoreEntry> entries;
    for (int j = 0; j < 12; ++j)
      entries.push_back(make_entry("w" + std::to_string(j),
                                   random_nonzero(rng, 6), random_nonzero(rng, 6)));
    ExemplarStore store = hand_store(std::move(entries));
    QueryEmbeddings q{vec(random_nonzero(rng, 6)), vec(random_nonzero(rng, 6)),
                      std::nullopt};
    RetrievalHit first = retrieve_best(store, q);
    store.entries.erase(store.entries.begin() +
                        static_cast<std::ptrdiff_t>(first.index));
    RetrievalHit second = retrieve_best(store, q);
    CHECK(second.score <= first.score + 1e-12);
  }
}

TEST_CASE("top-k is score-sorted with index tie-breaks") {
  ExemplarStore store = hand_store({
      make_entry("e0", {1, 0}, {1, 0}),
      make_entry("e1", {0.8, 0.2}, {0, 1}),
      make_entry("e2", {1, 0}, {0, 1}),
      make_entry("e3", {-1, 0}, {0, -1}),
  });
  QueryEmbeddings q{vec({1, 0}), vec({0.5, 0}), std::nullopt};
  auto top = retrieve_top_k(store, q, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].index == 0);  // score 1.0, tie with e2 -> lower index first
  CHECK(top[1].index == 2);
  CHECK(top[0].score >= top[1].score);
  CHECK(top[1].score >= top[2].score);
}
