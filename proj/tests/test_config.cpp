#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "esrm/battery.hpp"
#include "esrm/config.hpp"

namespace fs = std::filesystem;
using namespace esrm::cli;
using nlohmann::json;

namespace {

struct TempTree {
  fs::path root;
  TempTree() {
    root = fs::temp_directory_path() /
           ("esrm_cfg_" + std::to_string(
                              std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(root / "real");
    fs::create_directories(root / "test");
    fs::create_directories(root / "twin");
  }
  ~TempTree() { fs::remove_all(root); }

  json minimal() const {
    json j;
    j["data"]["real_root"] = (root / "real").string();
    j["data"]["test_root"] = (root / "test").string();
    j["data"]["class_count"] = 10;
    j["seeds"] = {1, 2};
    return j;
  }
};

}  // namespace

TEST_CASE("minimal config fills in the paper defaults") {
  TempTree tmp;
  const ExperimentConfig cfg = config_from_json(tmp.minimal());
  CHECK(cfg.train.stream_batch == 10);
  CHECK(cfg.train.mem_batch == 64);
  CHECK(cfg.train.loss_weights.tau == doctest::Approx(0.07));
  CHECK(cfg.train.loss_weights.t == doctest::Approx(4.0));
  CHECK(cfg.train.loss_weights.lambda1 == doctest::Approx(1.0));
  CHECK(cfg.train.loss_weights.lambda2 == doctest::Approx(0.5));
  CHECK(cfg.train.method == esrm::train::Method::esrm);
  CHECK(cfg.train.mem_strategy == esrm::replay::Strategy::es);
  CHECK(cfg.ratio == doctest::Approx(0.0));
}

TEST_CASE("unknown keys are rejected by name") {
  TempTree tmp;
  json j = tmp.minimal();
  j["trian"] = json::object();
  CHECK_THROWS_WITH(config_from_json(j), doctest::Contains("trian"));

  json j2 = tmp.minimal();
  j2["train"]["learning_rate"] = 0.1;
  CHECK_THROWS_WITH(config_from_json(j2), doctest::Contains("train.learning_rate"));
}

TEST_CASE("validation errors name the field") {
  TempTree tmp;
  json j = tmp.minimal();
  j["data"].erase("real_root");
  CHECK_THROWS_WITH(config_from_json(j), doctest::Contains("real_root"));

  json j2 = tmp.minimal();
  j2["data"]["ratio"] = 1.5;
  CHECK_THROWS_WITH(config_from_json(j2), doctest::Contains("ratio"));

  json j3 = tmp.minimal();
  j3["seeds"] = json::array();
  CHECK_THROWS(config_from_json(j3));

  json j4 = tmp.minimal();
  j4["data"]["ratio"] = 0.5;  // > 0 without twins
  CHECK_THROWS_WITH(config_from_json(j4), doctest::Contains("twin"));

  json j5 = tmp.minimal();
  j5["data"]["real_root"] = (tmp.root / "missing").string();
  CHECK_THROWS_WITH(config_from_json(j5), doctest::Contains("does not exist"));

  json j6 = tmp.minimal();
  j6["split"]["mode"] = "dil";  // no coarse map
  CHECK_THROWS_WITH(config_from_json(j6), doctest::Contains("coarse_map"));
}

TEST_CASE("config round-trips through its canonical serialization") {
  TempTree tmp;
  json j = tmp.minimal();
  j["data"]["ratio"] = 0.8;
  j["data"]["twins"] = json::array({{{"tag", "sdxl"}, {"root", (tmp.root / "twin").string()}}});
  j["train"]["method"] = "er";
  j["train"]["mem_strategy"] = "reservoir";
  j["train"]["lr"] = 0.005;
  const ExperimentConfig cfg = config_from_json(j);

  const json canonical = to_json(cfg);
  const ExperimentConfig back = config_from_json(canonical);
  CHECK(to_json(back) == canonical);
  CHECK(config_fingerprint(back) == config_fingerprint(cfg));
}

TEST_CASE("fingerprint tracks semantic changes only") {
  TempTree tmp;
  const ExperimentConfig a = config_from_json(tmp.minimal());
  const ExperimentConfig b = config_from_json(tmp.minimal());
  CHECK(config_fingerprint(a) == config_fingerprint(b));

  json changed = tmp.minimal();
  changed["train"]["lr"] = 0.123;
  CHECK(config_fingerprint(config_from_json(changed)) != config_fingerprint(a));

  json seeds = tmp.minimal();
  seeds["seeds"] = {5};
  CHECK(config_fingerprint(config_from_json(seeds)) != config_fingerprint(a));
}

TEST_CASE("effective shares: equal split by default, explicit shares honored") {
  TempTree tmp;
  json j = tmp.minimal();
  j["data"]["ratio"] = 0.5;
  j["data"]["twins"] =
      json::array({{{"tag", "a"}, {"root", (tmp.root / "twin").string()}},
                   {{"tag", "b"}, {"root", (tmp.root / "twin").string()}}});
  const ExperimentConfig cfg = config_from_json(j);
  const auto shares = effective_shares(cfg);
  CHECK(shares.at("a") == doctest::Approx(0.5));
  CHECK(shares.at("b") == doctest::Approx(0.5));

  json j2 = j;
  j2["data"]["twins"][0]["share"] = 0.7;
  j2["data"]["twins"][1]["share"] = 0.3;
  const auto explicit_shares = effective_shares(config_from_json(j2));
  CHECK(explicit_shares.at("a") == doctest::Approx(0.7));

  json j3 = j;
  j3["data"]["twins"][0]["share"] = 0.7;  // one of two -> error
  CHECK_THROWS(effective_shares(config_from_json(j3)));
}

TEST_CASE("results record round-trips through JSON") {
  ResultsRecord r;
  r.name = "demo";
  r.fingerprint = "abcd";
  SeedResult s1;
  s1.seed = 1;
  s1.ok = true;
  s1.faa = 0.5;
  s1.la = 0.6;
  s1.rf = 0.1;
  s1.auc = 0.71;
  SeedResult s2;
  s2.seed = 2;
  s2.ok = false;
  s2.error = "boom";
  r.per_seed = {s1, s2};
  r.faa = {0.5, 0.0};
  r.la = {0.6, 0.0};
  r.rf = {0.1, 0.0};
  r.auc = {0.71, 0.0};
  r.has_rf = true;
  r.has_auc = true;
  r.composition = {{10, 0.8}, {20, 0.7}};
  r.has_composition = true;
  r.hist_max_entropy = std::log(10.0);
  r.hist_real.assign(50, 1);
  r.hist_synthetic.assign(50, 2);
  r.has_histogram = true;
  r.roc = {{0.0, 0.0}, {0.5, 0.9}, {1.0, 1.0}};
  r.has_roc = true;

  const json j = results_to_json(r);
  const ResultsRecord back = results_from_json(j);
  CHECK(results_to_json(back) == j);
}

TEST_CASE("emit_plots writes columnar data and images, and is idempotent") {
  TempTree tmp;
  ResultsRecord r;
  r.name = "plots";
  r.fingerprint = "x";
  r.composition = {{10, 0.8}, {20, 0.6}, {30, 0.5}};
  r.has_composition = true;
  r.hist_max_entropy = std::log(10.0);
  r.hist_real.assign(50, 0);
  r.hist_synthetic.assign(50, 0);
  r.hist_real[10] = 5;
  r.hist_synthetic[2] = 7;
  r.has_histogram = true;
  r.roc = {{0.0, 0.0}, {0.2, 0.8}, {1.0, 1.0}};
  r.has_roc = true;

  const std::string out = (tmp.root / "plots").string();
  emit_plots(r, out);
  for (const char* f : {"composition_curve.tsv", "composition_curve.png", "entropy_hist.tsv",
                        "entropy_hist.png", "roc_curve.tsv", "roc_curve.png"})
    CHECK(fs::exists(fs::path(out) / f));

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string first = slurp(fs::path(out) / "composition_curve.tsv");
  emit_plots(r, out);
  CHECK(slurp(fs::path(out) / "composition_curve.tsv") == first);

  // missing trajectories are skipped, not fatal
  ResultsRecord sparse;
  sparse.name = "sparse";
  sparse.fingerprint = "y";
  emit_plots(sparse, out);
  CHECK(fs::exists(fs::path(out) / "roc_curve.png"));  // old outputs remain
}
