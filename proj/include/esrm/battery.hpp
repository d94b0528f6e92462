#pragma once

#include <array>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "esrm/config.hpp"
#include "esrm/metrics.hpp"

namespace esrm::cli {

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double faa = 0.0;
  double la = 0.0;
  std::optional<double> rf;   // undefined for single-task sequences
  std::optional<double> auc;  // undefined without both provenances
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ResultsRecord {
  std::string name;
  std::string fingerprint;
  std::vector<SeedResult> per_seed;
  Aggregate faa, la, rf, auc;
  bool has_rf = false;
  bool has_auc = false;

  // diagnostics for plotting
  std::vector<std::pair<long, double>> composition;  // iteration, mean synthetic fraction
  bool has_composition = false;
  double hist_max_entropy = 0.0;  // ln C
  std::vector<long> hist_real;    // 50 bins, summed over seeds
  std::vector<long> hist_synthetic;
  bool has_histogram = false;
  std::vector<std::pair<double, double>> roc;  // representative curve (first seed)
  bool has_roc = false;
};

// One run_experiment per seed; per-seed artifacts (step log, buffer
// snapshot, checkpoint) land under <out_dir>/seed_<s>/ and the aggregate
// record is written atomically to <out_dir>/results.json. Individual seed
// failures are recorded and the battery continues.
ResultsRecord run_battery(const ExperimentConfig& cfg);

nlohmann::json results_to_json(const ResultsRecord& r);
ResultsRecord results_from_json(const nlohmann::json& j);
ResultsRecord load_results(const std::string& results_json_path);

// Columnar data plus rendered PNGs for the entropy histogram, the
// synthetic-fraction curve, and the ROC curve. Missing trajectories are
// skipped with a warning on stderr. Overwrites existing outputs.
void emit_plots(const ResultsRecord& results, const std::string& out_dir);

}  // namespace esrm::cli
