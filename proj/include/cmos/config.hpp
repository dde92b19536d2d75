#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "cmos/backends.hpp"
#include "cmos/option_synthesis.hpp"
#include "cmos/qr_generation.hpp"

namespace cmos {

enum class BackendMode { Mock, Http };

struct PipelinePaths {
  std::filesystem::path dataset;
  std::filesystem::path exemplars;      // raw exemplar records
  std::filesystem::path store_dir;      // built exemplar store
  std::filesystem::path bank_manifest;  // bank.jsonl
  std::filesystem::path bank_dir;       // built image bank
  std::filesystem::path templates_dir;
  std::filesystem::path out_dir;
  std::filesystem::path mock_script;    // optional
};

struct RunConfig {
  BackendMode mode = BackendMode::Mock;
  OqrmConfig oqrm;
  TuneConfig tune;
  PipelinePaths paths;
  long long seed = 42;
  int parallelism = 1;
  BackendConfig encoder;
  BackendConfig chat;
  BackendConfig t2i;
  std::size_t mock_dim = 64;
  bool strict_mock_scripts = false;
  bool echo_calls = false;

  void validate() const;

  // Canonical semantic serialization; the output directory and local fixture
  // locations are excluded so identical runs into different directories
  // fingerprint identically.
  nlohmann::json semantic_json() const;
  std::string fingerprint() const;
};

// Config file (JSON object) with the documented schema; unknown keys are an
// error so typos fail loudly. Flags are applied by the CLI afterwards.
RunConfig load_run_config(const std::filesystem::path& file);
RunConfig default_run_config();

}  // namespace cmos
