#include "cmos/config.hpp"

#include <set>

#include "cmos/errors.hpp"
#include "cmos/sha256.hpp"
#include "cmos/util.hpp"

namespace cmos {

using nlohmann::json;

void RunConfig::validate() const {
  oqrm.validate();
  tune.validate();
  encoder.validate();
  chat.validate();
  t2i.validate();
  if (parallelism < 1) throw Error(Err::ConfigError, "parallelism must be >= 1");
  if (mock_dim < 8) throw Error(Err::ConfigError, "mock_dim must be >= 8");
}

json RunConfig::semantic_json() const {
  auto backend_json = [](const BackendConfig& b) {
    json j{{"model", b.model_name},
           {"temperature", b.temperature},
           {"top_p", b.top_p},
           {"image_size", b.image_size},
           {"max_retries", b.max_retries},
           {"max_concurrency", b.max_concurrency}};
    if (b.seed) j["seed"] = *b.seed;
    return j;
  };
  return json{{"mode", mode == BackendMode::Mock ? "mock" : "http"},
              {"oqrm",
               {{"alpha", oqrm.alpha},
                {"m", oqrm.m},
                {"photo_phrase", oqrm.photo_phrase_template}}},
              {"tune",
               {{"beta", tune.beta},
                {"sigma", tune.sigma},
                {"max_rounds", tune.max_rounds},
                {"t", tune.t}}},
              {"seed", seed},
              {"mock_dim", mock_dim},
              {"encoder", backend_json(encoder)},
              {"chat", backend_json(chat)},
              {"t2i", backend_json(t2i)}};
}

std::string RunConfig::fingerprint() const {
  return sha256_hex(semantic_json().dump()).substr(0, 16);
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.encoder.model_name = "mock-encoder";
  cfg.chat.model_name = "mock-chat";
  cfg.t2i.model_name = "mock-t2i";
  return cfg;
}

namespace {

void check_known_keys(const json& j, const std::set<std::string>& known,
                      const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw Error(Err::ConfigError, "unknown config key '" + key + "' in " + where);
}

void apply_backend(BackendConfig& b, const json& j, const std::string& where) {
  check_known_keys(j,
                   {"endpoint", "model", "temperature", "top_p", "image_size",
                    "seed", "timeout_ms", "max_retries", "max_concurrency"},
                   where);
  if (j.contains("endpoint")) b.endpoint = j.at("endpoint").get<std::string>();
  if (j.contains("model")) b.model_name = j.at("model").get<std::string>();
  if (j.contains("temperature")) b.temperature = j.at("temperature").get<double>();
  if (j.contains("top_p")) b.top_p = j.at("top_p").get<double>();
  if (j.contains("image_size")) b.image_size = j.at("image_size").get<std::string>();
  if (j.contains("seed")) {
    if (j.at("seed").is_null())
      b.seed.reset();
    else
      b.seed = j.at("seed").get<long long>();
  }
  if (j.contains("timeout_ms"))
    b.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long long>());
  if (j.contains("max_retries")) b.max_retries = j.at("max_retries").get<int>();
  if (j.contains("max_concurrency"))
    b.max_concurrency = j.at("max_concurrency").get<int>();
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& file) {
  json j;
  try {
    j = json::parse(read_text_file(file));
  } catch (const json::exception& e) {
    throw Error(Err::ConfigError,
                "config file " + file.string() + ": " + e.what());
  }
  check_known_keys(j,
                   {"mode", "alpha", "beta", "sigma", "max_rounds", "candidates",
                    "options", "photo_phrase", "seed", "parallelism", "mock_dim",
                    "strict_mock_scripts", "echo_calls", "paths", "encoder",
                    "chat", "t2i"},
                   "config root");

  RunConfig cfg = default_run_config();
  if (j.contains("mode")) {
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "mock")
      cfg.mode = BackendMode::Mock;
    else if (mode == "http")
      cfg.mode = BackendMode::Http;
    else
      throw Error(Err::ConfigError, "mode must be 'mock' or 'http'");
  }
  if (j.contains("alpha")) cfg.oqrm.alpha = j.at("alpha").get<double>();
  if (j.contains("candidates")) cfg.oqrm.m = j.at("candidates").get<int>();
  if (j.contains("photo_phrase"))
    cfg.oqrm.photo_phrase_template = j.at("photo_phrase").get<std::string>();
  if (j.contains("beta")) cfg.tune.beta = j.at("beta").get<double>();
  if (j.contains("sigma")) cfg.tune.sigma = j.at("sigma").get<double>();
  if (j.contains("max_rounds")) cfg.tune.max_rounds = j.at("max_rounds").get<int>();
  if (j.contains("options")) cfg.tune.t = j.at("options").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<long long>();
  if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<int>();
  if (j.contains("mock_dim")) cfg.mock_dim = j.at("mock_dim").get<std::size_t>();
  if (j.contains("strict_mock_scripts"))
    cfg.strict_mock_scripts = j.at("strict_mock_scripts").get<bool>();
  if (j.contains("echo_calls")) cfg.echo_calls = j.at("echo_calls").get<bool>();

  if (j.contains("paths")) {
    const json& p = j.at("paths");
    check_known_keys(p,
                     {"dataset", "exemplars", "store_dir", "bank_manifest",
                      "bank_dir", "templates_dir", "out_dir", "mock_script"},
                     "paths");
    const std::filesystem::path base = file.parent_path();
    auto resolve = [&](const char* key, std::filesystem::path& out) {
      if (!p.contains(key)) return;
      std::filesystem::path v = p.at(key).get<std::string>();
      out = v.is_absolute() ? v : base / v;
    };
    resolve("dataset", cfg.paths.dataset);
    resolve("exemplars", cfg.paths.exemplars);
    resolve("store_dir", cfg.paths.store_dir);
    resolve("bank_manifest", cfg.paths.bank_manifest);
    resolve("bank_dir", cfg.paths.bank_dir);
    resolve("templates_dir", cfg.paths.templates_dir);
    resolve("out_dir", cfg.paths.out_dir);
    resolve("mock_script", cfg.paths.mock_script);
  }
  if (j.contains("encoder")) apply_backend(cfg.encoder, j.at("encoder"), "encoder");
  if (j.contains("chat")) apply_backend(cfg.chat, j.at("chat"), "chat");
  if (j.contains("t2i")) apply_backend(cfg.t2i, j.at("t2i"), "t2i");
  return cfg;
}

}  // namespace cmos
