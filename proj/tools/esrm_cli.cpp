#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "esrm/battery.hpp"
#include "esrm/config.hpp"
#include "esrm/data/contaminate.hpp"
#include "esrm/data/dataset_io.hpp"
#include "esrm/data/toy.hpp"
#include "esrm/metrics.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRunFailure = 2;

std::pair<std::string, std::string> split_tag_value(const std::string& s, const char* what) {
  const auto pos = s.find('=');
  if (pos == std::string::npos || pos == 0 || pos + 1 == s.size())
    throw esrm::cli::ConfigError(std::string(what) + " must look like tag=value: " + s);
  return {s.substr(0, pos), s.substr(pos + 1)};
}

int cmd_contaminate(const std::string& real_root, int class_count,
                    const std::vector<std::string>& twin_args, double ratio,
                    const std::vector<std::string>& share_args, std::uint64_t seed,
                    const std::string& out) {
  using namespace esrm;

  data::ContaminationSpec spec;
  spec.ratio_P = ratio;
  spec.seed = seed;

  std::map<std::string, data::LabeledDataset> twins;
  for (const std::string& arg : twin_args) {
    const auto [tag, root] = split_tag_value(arg, "--twin");
    twins.emplace(tag, data::load_dataset(root, class_count, data::Provenance::synthetic, tag));
  }
  if (share_args.empty()) {
    for (const auto& [tag, _] : twins)
      spec.source_shares[tag] = 1.0 / static_cast<double>(twins.size());
  } else {
    for (const std::string& arg : share_args) {
      const auto [tag, value] = split_tag_value(arg, "--share");
      spec.source_shares[tag] = std::stod(value);
    }
  }

  const data::LabeledDataset real =
      data::load_dataset(real_root, class_count, data::Provenance::real);
  const data::LabeledDataset mixed = data::contaminate(real, twins, spec);
  data::save_dataset(mixed, out);

  std::size_t synthetic = 0;
  for (const auto& s : mixed.samples)
    if (s.provenance == data::Provenance::synthetic) ++synthetic;
  std::cout << "wrote " << mixed.samples.size() << " samples (" << synthetic << " synthetic) to "
            << out << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, const std::optional<double>& ratio,
            const std::optional<std::size_t>& buffer_size, const std::optional<std::string>& method,
            const std::optional<std::string>& mem_strategy,
            const std::optional<std::uint64_t>& seed, const std::optional<std::string>& out) {
  using namespace esrm;

  cli::ExperimentConfig cfg = cli::parse_config(config_path);
  if (ratio) cfg.ratio = *ratio;
  if (buffer_size) cfg.train.buffer_capacity = *buffer_size;
  if (method) cfg.train.method = train::method_from_string(*method);
  if (mem_strategy) cfg.train.mem_strategy = replay::strategy_from_string(*mem_strategy);
  if (seed) cfg.seeds = {*seed};
  if (out) cfg.out_dir = *out;
  if (cfg.ratio < 0.0 || cfg.ratio > 1.0) throw cli::ConfigError("--ratio must lie in [0,1]");

  const cli::ResultsRecord rec = cli::run_battery(cfg);

  bool all_ok = true;
  for (const cli::SeedResult& sr : rec.per_seed) {
    std::cout << "seed " << sr.seed << ": ";
    if (sr.ok) {
      std::cout << "FAA " << sr.faa << "  LA " << sr.la;
      if (sr.rf) std::cout << "  RF " << *sr.rf;
      if (sr.auc) std::cout << "  AUC " << *sr.auc;
      std::cout << "\n";
    } else {
      std::cout << "FAILED (" << sr.error << ")\n";
      all_ok = false;
    }
  }
  std::cout << "aggregate FAA " << rec.faa.mean << " +- " << rec.faa.stddev << " (results in "
            << cfg.out_dir << ")\n";
  return all_ok ? kExitOk : kExitRunFailure;
}

int cmd_plots(const std::string& results_arg, const std::string& out_dir) {
  using namespace esrm;
  const fs::path p(results_arg);
  const std::string file =
      fs::is_directory(p) ? (p / "results.json").string() : results_arg;
  cli::emit_plots(cli::load_results(file), out_dir);
  std::cout << "plots written to " << out_dir << "\n";
  return kExitOk;
}

int cmd_export_embeddings(const std::string& checkpoint, const std::string& backbone,
                          int class_count, const std::string& data_root,
                          const std::string& snapshot, const std::vector<int>& classes,
                          const std::string& out_file) {
  using namespace esrm;

  nn::LearnerModel model(nn::backbone_from_string(backbone), class_count, 3, 0);
  model.load_checkpoint(checkpoint);

  const data::LabeledDataset ds = data::load_dataset(data_root, class_count);
  std::map<long, const data::Sample*> by_id;
  for (const data::Sample& s : ds.samples) by_id[s.id] = &s;

  std::ifstream snap(snapshot);
  if (!snap) throw std::runtime_error("cannot open snapshot: " + snapshot);
  std::string header;
  std::getline(snap, header);

  std::vector<std::pair<data::Sample, double>> rows;
  std::string line;
  while (std::getline(snap, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find('\t', start);
      fields.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (fields.size() != 5) throw std::runtime_error("malformed snapshot line: " + line);
    const long id = std::stol(fields[0]);
    const double ent = std::stod(fields[4]);
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("snapshot id " + std::to_string(id) + " not in dataset");
    rows.emplace_back(*it->second, ent);
  }

  replay::MemoryBuffer buffer(std::max<std::size_t>(rows.size(), 1), replay::Strategy::reservoir);
  for (const auto& [sample, ent] : rows) buffer.restore_slot(sample, ent);

  std::ofstream out(out_file);
  if (!out) throw std::runtime_error("cannot write " + out_file);
  eval::export_embeddings(model, buffer, classes, out);
  std::cout << "wrote " << rows.size() << " candidate slots to " << out_file << "\n";
  return kExitOk;
}

int cmd_make_dataset(const std::string& out, int classes, int per_class_train, int per_class_test,
                     int image_size, int medoids, std::uint64_t seed) {
  using namespace esrm;
  data::ToyConfig cfg;
  cfg.classes = classes;
  cfg.per_class_train = per_class_train;
  cfg.per_class_test = per_class_test;
  cfg.image_size = image_size;
  cfg.twin_medoids = medoids;
  cfg.seed = seed;
  const data::ToySet set = data::make_toy_dataset(cfg);
  data::save_dataset(set.train, (fs::path(out) / "real_train").string());
  data::save_dataset(set.test, (fs::path(out) / "real_test").string());
  data::save_dataset(set.twin, (fs::path(out) / "twin").string());
  std::cout << "wrote " << set.train.samples.size() << " train / " << set.test.samples.size()
            << " test / " << set.twin.samples.size() << " twin images under " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online continual learning under synthetic-data contamination"};
  app.require_subcommand(1);

  // contaminate
  auto* contaminate = app.add_subcommand("contaminate", "Build a contaminated dataset + manifest");
  std::string c_real, c_out;
  int c_classes = 0;
  std::vector<std::string> c_twins, c_shares;
  double c_ratio = 0.0;
  std::uint64_t c_seed = 0;
  contaminate->add_option("--real-root", c_real)->required();
  contaminate->add_option("--class-count", c_classes)->required();
  contaminate->add_option("--twin", c_twins, "tag=root, repeatable")->required();
  contaminate->add_option("--ratio", c_ratio)->required();
  contaminate->add_option("--share", c_shares, "tag=share, default equal split");
  contaminate->add_option("--seed", c_seed);
  contaminate->add_option("--out", c_out)->required();

  // run
  auto* run = app.add_subcommand("run", "Run a seeded experiment battery");
  std::string r_config;
  std::optional<double> r_ratio;
  std::optional<std::size_t> r_buffer;
  std::optional<std::string> r_method, r_strategy, r_out;
  std::optional<std::uint64_t> r_seed;
  run->add_option("--config", r_config)->required();
  run->add_option("--ratio", r_ratio, "override data.ratio");
  run->add_option("--buffer-size", r_buffer, "override train.buffer_capacity");
  run->add_option("--method", r_method, "override train.method (esrm|er)");
  run->add_option("--mem-strategy", r_strategy,
                  "override train.mem_strategy (es|reservoir|real_only|synthetic_only)");
  run->add_option("--seed", r_seed, "run a single seed instead of the config list");
  run->add_option("--out", r_out, "override out_dir");

  // plots
  auto* plots = app.add_subcommand("plots", "Render diagnostic plots from results");
  std::string p_results, p_out;
  plots->add_option("--results", p_results, "results dir or results.json")->required();
  plots->add_option("--out", p_out)->required();

  // export-embeddings
  auto* exp = app.add_subcommand("export-embeddings",
                                 "Recompute buffer projections from a checkpoint + snapshot");
  std::string e_ckpt, e_backbone = "resnet18", e_root, e_snapshot, e_out;
  int e_classes_n = 0;
  std::vector<int> e_filter;
  exp->add_option("--checkpoint", e_ckpt)->required();
  exp->add_option("--backbone", e_backbone, "resnet18|small_cnn");
  exp->add_option("--class-count", e_classes_n)->required();
  exp->add_option("--data-root", e_root)->required();
  exp->add_option("--snapshot", e_snapshot)->required();
  exp->add_option("--classes", e_filter, "label filter, empty = all");
  exp->add_option("--out", e_out)->required();

  // make-dataset
  auto* make = app.add_subcommand("make-dataset", "Generate the procedural desk-scale benchmark");
  std::string m_out;
  int m_classes = 10, m_train = 160, m_test = 40, m_size = 32, m_medoids = 10;
  std::uint64_t m_seed = 7;
  make->add_option("--out", m_out)->required();
  make->add_option("--classes", m_classes);
  make->add_option("--per-class-train", m_train);
  make->add_option("--per-class-test", m_test);
  make->add_option("--image-size", m_size);
  make->add_option("--medoids", m_medoids);
  make->add_option("--seed", m_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (contaminate->parsed())
      return cmd_contaminate(c_real, c_classes, c_twins, c_ratio, c_shares, c_seed, c_out);
    if (run->parsed())
      return cmd_run(r_config, r_ratio, r_buffer, r_method, r_strategy, r_seed, r_out);
    if (plots->parsed()) return cmd_plots(p_results, p_out);
    if (exp->parsed())
      return cmd_export_embeddings(e_ckpt, e_backbone, e_classes_n, e_root, e_snapshot, e_filter,
                                   e_out);
    if (make->parsed())
      return cmd_make_dataset(m_out, m_classes, m_train, m_test, m_size, m_medoids, m_seed);
  } catch (const esrm::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}
