#pragma once

#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "esrm/trainer.hpp"

namespace esrm::cli {

// Invalid or malformed configuration; the CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct TwinSource {
  std::string tag;
  std::string root;
  double share = -1.0;  // negative = unspecified, split equally
};

struct ExperimentConfig {
  std::string name = "experiment";

  // data
  std::string real_root;
  std::string test_root;
  int class_count = 0;
  std::vector<TwinSource> twins;
  double ratio = 0.0;

  // split
  data::SplitMode split_mode = data::SplitMode::CIL;
  int n_tasks = 5;                // CIL
  std::string coarse_map_path;    // DIL: JSON array, coarse_map[fine] = coarse
  int n_steps = 5;                // DIL

  train::TrainConfig train;  // per-run seed is overwritten from `seeds`
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "results";
};

// Strict parse: unknown keys are rejected with their path; paper defaults
// (stream 10, mem 64, tau 0.07, t 4, lambda1 1, lambda2 0.5) fill omitted
// fields. Referenced paths are checked for existence.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig config_from_json(const nlohmann::json& j, bool check_paths = true);

// Canonical serialization with every field materialized; key order is
// stable, so the dump is fingerprintable.
nlohmann::json to_json(const ExperimentConfig& cfg);

// FNV-1a 64 over the canonical serialization.
std::string config_fingerprint(const ExperimentConfig& cfg);

// Effective per-source shares (explicit values, or an equal split when no
// twin specifies one).
std::map<std::string, double> effective_shares(const ExperimentConfig& cfg);

std::vector<int> load_coarse_map(const std::string& path, int class_count);

}  // namespace esrm::cli
