#include "esrm/battery.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "esrm/data/contaminate.hpp"
#include "esrm/data/dataset_io.hpp"
#include "esrm/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace esrm::cli {

namespace {

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return a;
}

void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

void write_step_log(const fs::path& path, const train::TrainLog& log) {
  std::ofstream out(path);
  out << "iteration\ttask\ttotal\tce\tsdc\trm\n";
  for (const train::StepLog& s : log.steps)
    out << s.iteration << '\t' << s.task << '\t' << s.total << '\t' << s.ce << '\t' << s.sdc
        << '\t' << s.rm << '\n';
}

}  // namespace

ResultsRecord run_battery(const ExperimentConfig& cfg) {
  const data::LabeledDataset real =
      data::load_dataset(cfg.real_root, cfg.class_count, data::Provenance::real);
  const data::LabeledDataset test =
      data::load_dataset(cfg.test_root, cfg.class_count, data::Provenance::real);
  std::map<std::string, data::LabeledDataset> twins;
  for (const TwinSource& t : cfg.twins)
    twins.emplace(t.tag,
                  data::load_dataset(t.root, cfg.class_count, data::Provenance::synthetic, t.tag));
  const auto shares = effective_shares(cfg);
  std::vector<int> coarse_map;
  if (cfg.split_mode == data::SplitMode::DIL)
    coarse_map = load_coarse_map(cfg.coarse_map_path, cfg.class_count);

  ResultsRecord rec;
  rec.name = cfg.name;
  rec.fingerprint = config_fingerprint(cfg);
  fs::create_directories(cfg.out_dir);

  std::vector<std::vector<std::pair<long, double>>> compositions;

  for (const std::uint64_t seed : cfg.seeds) {
    SeedResult sr;
    sr.seed = seed;
    try {
      data::ContaminationSpec cspec;
      cspec.ratio_P = cfg.ratio;
      cspec.source_shares = shares;
      cspec.seed = seed;
      const data::LabeledDataset train_ds =
          cfg.twins.empty() ? real : data::contaminate(real, twins, cspec);

      const data::TaskSequence seq =
          cfg.split_mode == data::SplitMode::CIL
              ? data::split_cil(train_ds, cfg.n_tasks, seed)
              : data::split_dil(train_ds, coarse_map, cfg.n_steps, seed);
      const auto test_sets = data::build_test_sets(test, seq, coarse_map);

      nn::LearnerModel model(cfg.train.backbone, seq.learner_class_count, 3, seed);
      replay::MemoryBuffer buffer(cfg.train.buffer_capacity, cfg.train.mem_strategy, seq.mode);
      train::TrainConfig tc = cfg.train;
      tc.seed = seed;

      const train::ExperimentResult run = train::run_experiment(model, buffer, seq, test_sets, tc);

      sr.faa = eval::final_average_accuracy(run.accuracy);
      sr.la = eval::learning_accuracy(run.accuracy);
      if (run.accuracy.task_count() >= 2) {
        sr.rf = eval::relative_forgetting(run.accuracy);
        rec.has_rf = true;
      }

      // end-of-training diagnostics over the (contaminated) training set
      const eval::EntropyHistogram hist =
          eval::entropy_histogram(model, train_ds, cfg.train.eval_batch);
      if (rec.hist_real.empty()) {
        rec.hist_real.assign(eval::EntropyHistogram::kBins, 0);
        rec.hist_synthetic.assign(eval::EntropyHistogram::kBins, 0);
        rec.hist_max_entropy = hist.max_entropy;
      }
      for (int b = 0; b < eval::EntropyHistogram::kBins; ++b) {
        rec.hist_real[static_cast<std::size_t>(b)] += hist.real[static_cast<std::size_t>(b)];
        rec.hist_synthetic[static_cast<std::size_t>(b)] +=
            hist.synthetic[static_cast<std::size_t>(b)];
      }
      rec.has_histogram = true;

      bool has_both = false, has_real = false, has_syn = false;
      for (const data::Sample& s : train_ds.samples) {
        (s.provenance == data::Provenance::real ? has_real : has_syn) = true;
        if (has_real && has_syn) {
          has_both = true;
          break;
        }
      }
      if (has_both) {
        const std::vector<double> ent =
            eval::dataset_entropies(model, train_ds, cfg.train.eval_batch);
        std::vector<data::Provenance> prov;
        prov.reserve(train_ds.samples.size());
        for (const data::Sample& s : train_ds.samples) prov.push_back(s.provenance);
        sr.auc = eval::synthetic_roc_auc(ent, prov);
        rec.has_auc = true;
        if (!rec.has_roc) {
          rec.roc = eval::roc_curve(ent, prov);
          rec.has_roc = true;
        }
      }

      std::vector<std::pair<long, double>> comp;
      for (const train::CompositionPoint& p : run.log.composition)
        comp.emplace_back(p.iteration, p.synthetic_fraction);
      compositions.push_back(std::move(comp));

      const fs::path seed_dir = fs::path(cfg.out_dir) / ("seed_" + std::to_string(seed));
      fs::create_directories(seed_dir);
      write_step_log(seed_dir / "log.tsv", run.log);
      {
        std::ofstream snap(seed_dir / "buffer_snapshot.tsv");
        buffer.write_snapshot(snap);
      }
      model.save_checkpoint((seed_dir / "checkpoint.bin").string());
      {
        std::ofstream acc(seed_dir / "accuracy_matrix.tsv");
        for (const auto& row : run.accuracy.a) {
          for (std::size_t j = 0; j < row.size(); ++j) acc << (j ? "\t" : "") << row[j];
          acc << '\n';
        }
      }

      sr.ok = true;
    } catch (const std::exception& e) {
      sr.ok = false;
      sr.error = e.what();
      std::cerr << "seed " << seed << " failed: " << e.what() << "\n";
    }
    rec.per_seed.push_back(std::move(sr));
  }

  std::vector<double> faas, las, rfs, aucs;
  for (const SeedResult& sr : rec.per_seed) {
    if (!sr.ok) continue;
    faas.push_back(sr.faa);
    las.push_back(sr.la);
    if (sr.rf) rfs.push_back(*sr.rf);
    if (sr.auc) aucs.push_back(*sr.auc);
  }
  rec.faa = aggregate_of(faas);
  rec.la = aggregate_of(las);
  rec.rf = aggregate_of(rfs);
  rec.auc = aggregate_of(aucs);

  if (!compositions.empty()) {
    std::size_t min_len = compositions.front().size();
    for (const auto& c : compositions) min_len = std::min(min_len, c.size());
    for (std::size_t i = 0; i < min_len; ++i) {
      double mean = 0.0;
      for (const auto& c : compositions) mean += c[i].second;
      rec.composition.emplace_back(compositions.front()[i].first,
                                   mean / static_cast<double>(compositions.size()));
    }
    rec.has_composition = !rec.composition.empty();
  }

  write_atomically(fs::path(cfg.out_dir) / "results.json", results_to_json(rec).dump(2) + "\n");
  {
    std::string lines;
    for (const SeedResult& sr : rec.per_seed) {
      json j;
      j["seed"] = sr.seed;
      j["ok"] = sr.ok;
      j["error"] = sr.error;
      j["faa"] = sr.faa;
      j["la"] = sr.la;
      if (sr.rf) j["rf"] = *sr.rf;
      if (sr.auc) j["auc"] = *sr.auc;
      lines += j.dump() + "\n";
    }
    write_atomically(fs::path(cfg.out_dir) / "per_seed.jsonl", lines);
  }
  return rec;
}

json results_to_json(const ResultsRecord& r) {
  json j;
  j["name"] = r.name;
  j["fingerprint"] = r.fingerprint;
  j["per_seed"] = json::array();
  for (const SeedResult& sr : r.per_seed) {
    json s;
    s["seed"] = sr.seed;
    s["ok"] = sr.ok;
    s["error"] = sr.error;
    s["faa"] = sr.faa;
    s["la"] = sr.la;
    s["rf"] = sr.rf ? json(*sr.rf) : json(nullptr);
    s["auc"] = sr.auc ? json(*sr.auc) : json(nullptr);
    j["per_seed"].push_back(s);
  }
  auto agg = [](const Aggregate& a) {
    json out;
    out["mean"] = a.mean;
    out["stddev"] = a.stddev;
    return out;
  };
  j["aggregate"]["faa"] = agg(r.faa);
  j["aggregate"]["la"] = agg(r.la);
  j["aggregate"]["rf"] = agg(r.rf);
  j["aggregate"]["auc"] = agg(r.auc);
  j["has_rf"] = r.has_rf;
  j["has_auc"] = r.has_auc;

  if (r.has_composition) {
    json comp = json::array();
    for (const auto& [it, frac] : r.composition) comp.push_back(json::array({it, frac}));
    j["composition"] = comp;
  } else {
    j["composition"] = nullptr;
  }
  if (r.has_histogram) {
    j["histogram"]["max_entropy"] = r.hist_max_entropy;
    j["histogram"]["real"] = r.hist_real;
    j["histogram"]["synthetic"] = r.hist_synthetic;
  } else {
    j["histogram"] = nullptr;
  }
  if (r.has_roc) {
    json roc = json::array();
    for (const auto& [fpr, tpr] : r.roc) roc.push_back(json::array({fpr, tpr}));
    j["roc"] = roc;
  } else {
    j["roc"] = nullptr;
  }
  return j;
}

ResultsRecord results_from_json(const json& j) {
  ResultsRecord r;
  r.name = j.at("name").get<std::string>();
  r.fingerprint = j.at("fingerprint").get<std::string>();
  for (const json& s : j.at("per_seed")) {
    SeedResult sr;
    sr.seed = s.at("seed").get<std::uint64_t>();
    sr.ok = s.at("ok").get<bool>();
    sr.error = s.at("error").get<std::string>();
    sr.faa = s.at("faa").get<double>();
    sr.la = s.at("la").get<double>();
    if (!s.at("rf").is_null()) sr.rf = s.at("rf").get<double>();
    if (!s.at("auc").is_null()) sr.auc = s.at("auc").get<double>();
    r.per_seed.push_back(std::move(sr));
  }
  auto agg = [](const json& a) {
    Aggregate out;
    out.mean = a.at("mean").get<double>();
    out.stddev = a.at("stddev").get<double>();
    return out;
  };
  r.faa = agg(j.at("aggregate").at("faa"));
  r.la = agg(j.at("aggregate").at("la"));
  r.rf = agg(j.at("aggregate").at("rf"));
  r.auc = agg(j.at("aggregate").at("auc"));
  r.has_rf = j.at("has_rf").get<bool>();
  r.has_auc = j.at("has_auc").get<bool>();

  if (!j.at("composition").is_null()) {
    for (const json& p : j.at("composition"))
      r.composition.emplace_back(p.at(0).get<long>(), p.at(1).get<double>());
    r.has_composition = true;
  }
  if (!j.at("histogram").is_null()) {
    r.hist_max_entropy = j.at("histogram").at("max_entropy").get<double>();
    r.hist_real = j.at("histogram").at("real").get<std::vector<long>>();
    r.hist_synthetic = j.at("histogram").at("synthetic").get<std::vector<long>>();
    r.has_histogram = true;
  }
  if (!j.at("roc").is_null()) {
    for (const json& p : j.at("roc"))
      r.roc.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    r.has_roc = true;
  }
  return r;
}

ResultsRecord load_results(const std::string& results_json_path) {
  std::ifstream in(results_json_path);
  if (!in) throw std::runtime_error("cannot open results file: " + results_json_path);
  json j;
  in >> j;
  return results_from_json(j);
}

void emit_plots(const ResultsRecord& results, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  if (results.has_composition) {
    {
      std::ofstream tsv(out / "composition_curve.tsv");
      tsv << "iteration\tsynthetic_fraction\n";
      for (const auto& [it, frac] : results.composition) tsv << it << '\t' << frac << '\n';
    }
    plot::Figure fig(640, 420);
    const double x_max = static_cast<double>(results.composition.back().first);
    fig.set_ranges(0.0, x_max > 0 ? x_max : 1.0, 0.0, 1.0);
    std::vector<std::pair<double, double>> pts;
    for (const auto& [it, frac] : results.composition)
      pts.emplace_back(static_cast<double>(it), frac);
    fig.polyline(pts, plot::kBlue);
    fig.save((out / "composition_curve.png").string());
  } else {
    std::cerr << "warning: no buffer composition trajectory, skipping composition plot\n";
  }

  if (results.has_histogram) {
    const int bins = static_cast<int>(results.hist_real.size());
    {
      std::ofstream tsv(out / "entropy_hist.tsv");
      tsv << "bin_low\tbin_high\treal\tsynthetic\n";
      for (int b = 0; b < bins; ++b)
        tsv << results.hist_max_entropy * b / bins << '\t'
            << results.hist_max_entropy * (b + 1) / bins << '\t'
            << results.hist_real[static_cast<std::size_t>(b)] << '\t'
            << results.hist_synthetic[static_cast<std::size_t>(b)] << '\n';
    }
    plot::Figure fig(640, 420);
    double peak = 1.0;
    for (int b = 0; b < bins; ++b)
      peak = std::max({peak, static_cast<double>(results.hist_real[static_cast<std::size_t>(b)]),
                       static_cast<double>(results.hist_synthetic[static_cast<std::size_t>(b)])});
    fig.set_ranges(0.0, results.hist_max_entropy, 0.0, peak);
    std::vector<double> real_f(results.hist_real.begin(), results.hist_real.end());
    std::vector<double> syn_f(results.hist_synthetic.begin(), results.hist_synthetic.end());
    fig.bar_pair(real_f, syn_f, plot::kBlue, plot::kOrange);
    fig.save((out / "entropy_hist.png").string());
  } else {
    std::cerr << "warning: no entropy histogram data, skipping histogram plot\n";
  }

  if (results.has_roc) {
    {
      std::ofstream tsv(out / "roc_curve.tsv");
      tsv << "fpr\ttpr\n";
      for (const auto& [fpr, tpr] : results.roc) tsv << fpr << '\t' << tpr << '\n';
    }
    plot::Figure fig(480, 480);
    fig.set_ranges(0.0, 1.0, 0.0, 1.0);
    fig.polyline({{0.0, 0.0}, {1.0, 1.0}}, plot::kGray);
    fig.polyline(results.roc, plot::kOrange);
    fig.save((out / "roc_curve.png").string());
  } else {
    std::cerr << "warning: no ROC data, skipping ROC plot\n";
  }
}

}  // namespace esrm::cli
