#include "esrm/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;

namespace esrm::cli {

namespace {

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown config key: " + path + key);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

void require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError("missing required config key: " + path + key);
}

void check_dir(const std::string& p, const std::string& field) {
  if (!fs::is_directory(p)) throw ConfigError(field + ": directory does not exist: " + p);
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

ExperimentConfig config_from_json(const json& j, bool check_paths) {
  check_keys(j, "", {"name", "data", "split", "train", "seeds", "out_dir"});
  ExperimentConfig cfg;
  cfg.name = get_or<std::string>(j, "name", cfg.name);
  cfg.out_dir = get_or<std::string>(j, "out_dir", cfg.out_dir);

  require(j, "data", "");
  const json& d = j.at("data");
  check_keys(d, "data.", {"real_root", "test_root", "class_count", "twins", "ratio"});
  require(d, "real_root", "data.");
  require(d, "test_root", "data.");
  require(d, "class_count", "data.");
  cfg.real_root = d.at("real_root").get<std::string>();
  cfg.test_root = d.at("test_root").get<std::string>();
  cfg.class_count = d.at("class_count").get<int>();
  cfg.ratio = get_or<double>(d, "ratio", 0.0);
  if (cfg.class_count <= 0) throw ConfigError("data.class_count must be positive");
  if (cfg.ratio < 0.0 || cfg.ratio > 1.0) throw ConfigError("data.ratio must lie in [0,1]");
  if (d.contains("twins")) {
    for (const json& t : d.at("twins")) {
      check_keys(t, "data.twins[].", {"tag", "root", "share"});
      require(t, "tag", "data.twins[].");
      require(t, "root", "data.twins[].");
      TwinSource src;
      src.tag = t.at("tag").get<std::string>();
      src.root = t.at("root").get<std::string>();
      src.share = get_or<double>(t, "share", -1.0);
      cfg.twins.push_back(std::move(src));
    }
  }
  if (cfg.ratio > 0.0 && cfg.twins.empty())
    throw ConfigError("data.ratio > 0 requires at least one twin source");

  if (j.contains("split")) {
    const json& s = j.at("split");
    check_keys(s, "split.", {"mode", "n_tasks", "coarse_map", "n_steps"});
    const std::string mode = get_or<std::string>(s, "mode", "cil");
    if (mode == "cil")
      cfg.split_mode = data::SplitMode::CIL;
    else if (mode == "dil")
      cfg.split_mode = data::SplitMode::DIL;
    else
      throw ConfigError("split.mode must be 'cil' or 'dil'");
    cfg.n_tasks = get_or<int>(s, "n_tasks", cfg.n_tasks);
    cfg.n_steps = get_or<int>(s, "n_steps", cfg.n_steps);
    cfg.coarse_map_path = get_or<std::string>(s, "coarse_map", "");
    if (cfg.split_mode == data::SplitMode::DIL && cfg.coarse_map_path.empty())
      throw ConfigError("split.coarse_map is required in DIL mode");
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, "train.",
               {"method", "mem_strategy", "buffer_capacity", "backbone", "optimizer", "lr",
                "momentum", "weight_decay", "stream_batch", "mem_batch", "augmentation", "tau",
                "t", "lambda1", "lambda2", "eval_batch", "composition_every"});
    auto& tc = cfg.train;
    tc.method = train::method_from_string(get_or<std::string>(t, "method", "esrm"));
    tc.mem_strategy =
        replay::strategy_from_string(get_or<std::string>(t, "mem_strategy", "es"));
    tc.buffer_capacity = get_or<std::size_t>(t, "buffer_capacity", tc.buffer_capacity);
    tc.backbone = nn::backbone_from_string(get_or<std::string>(t, "backbone", "resnet18"));
    tc.optimizer = get_or<std::string>(t, "optimizer", tc.optimizer);
    if (tc.optimizer != "sgd" && tc.optimizer != "adamw")
      throw ConfigError("train.optimizer must be 'sgd' or 'adamw'");
    tc.lr = get_or<double>(t, "lr", tc.lr);
    tc.momentum = get_or<double>(t, "momentum", tc.momentum);
    tc.weight_decay = get_or<double>(t, "weight_decay", tc.weight_decay);
    tc.stream_batch = get_or<int>(t, "stream_batch", tc.stream_batch);
    tc.mem_batch = get_or<int>(t, "mem_batch", tc.mem_batch);
    const std::string aug = get_or<std::string>(t, "augmentation", "partial");
    if (aug == "partial")
      tc.augmentation.kind = data::AugmentationKind::partial;
    else if (aug == "full")
      tc.augmentation.kind = data::AugmentationKind::full;
    else
      throw ConfigError("train.augmentation must be 'partial' or 'full'");
    tc.loss_weights.tau = get_or<double>(t, "tau", tc.loss_weights.tau);
    tc.loss_weights.t = get_or<double>(t, "t", tc.loss_weights.t);
    tc.loss_weights.lambda1 = get_or<double>(t, "lambda1", tc.loss_weights.lambda1);
    tc.loss_weights.lambda2 = get_or<double>(t, "lambda2", tc.loss_weights.lambda2);
    tc.eval_batch = get_or<int>(t, "eval_batch", tc.eval_batch);
    tc.composition_every = get_or<int>(t, "composition_every", tc.composition_every);
    if (tc.stream_batch < 2) throw ConfigError("train.stream_batch must be >= 2");
    if (tc.buffer_capacity == 0) throw ConfigError("train.buffer_capacity must be positive");
    if (tc.loss_weights.tau <= 0.0) throw ConfigError("train.tau must be positive");
    if (tc.loss_weights.t <= 0.0) throw ConfigError("train.t must be positive");
  }

  require(j, "seeds", "");
  for (const json& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
  if (cfg.seeds.empty()) throw ConfigError("seeds must be a non-empty list");

  if (check_paths) {
    check_dir(cfg.real_root, "data.real_root");
    check_dir(cfg.test_root, "data.test_root");
    for (const TwinSource& t : cfg.twins) check_dir(t.root, "data.twins[" + t.tag + "].root");
    if (!cfg.coarse_map_path.empty() && !fs::is_regular_file(cfg.coarse_map_path))
      throw ConfigError("split.coarse_map: file does not exist: " + cfg.coarse_map_path);
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["out_dir"] = cfg.out_dir;
  j["data"]["real_root"] = cfg.real_root;
  j["data"]["test_root"] = cfg.test_root;
  j["data"]["class_count"] = cfg.class_count;
  j["data"]["ratio"] = cfg.ratio;
  j["data"]["twins"] = json::array();
  for (const TwinSource& t : cfg.twins) {
    json tj;
    tj["tag"] = t.tag;
    tj["root"] = t.root;
    tj["share"] = t.share;
    j["data"]["twins"].push_back(tj);
  }
  j["split"]["mode"] = cfg.split_mode == data::SplitMode::CIL ? "cil" : "dil";
  j["split"]["n_tasks"] = cfg.n_tasks;
  j["split"]["n_steps"] = cfg.n_steps;
  j["split"]["coarse_map"] = cfg.coarse_map_path;
  const auto& tc = cfg.train;
  j["train"]["method"] = train::to_string(tc.method);
  j["train"]["mem_strategy"] = replay::to_string(tc.mem_strategy);
  j["train"]["buffer_capacity"] = tc.buffer_capacity;
  j["train"]["backbone"] = nn::to_string(tc.backbone);
  j["train"]["optimizer"] = tc.optimizer;
  j["train"]["lr"] = tc.lr;
  j["train"]["momentum"] = tc.momentum;
  j["train"]["weight_decay"] = tc.weight_decay;
  j["train"]["stream_batch"] = tc.stream_batch;
  j["train"]["mem_batch"] = tc.mem_batch;
  j["train"]["augmentation"] =
      tc.augmentation.kind == data::AugmentationKind::partial ? "partial" : "full";
  j["train"]["tau"] = tc.loss_weights.tau;
  j["train"]["t"] = tc.loss_weights.t;
  j["train"]["lambda1"] = tc.loss_weights.lambda1;
  j["train"]["lambda2"] = tc.loss_weights.lambda2;
  j["train"]["eval_batch"] = tc.eval_batch;
  j["train"]["composition_every"] = tc.composition_every;
  j["seeds"] = cfg.seeds;
  return j;
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

std::map<std::string, double> effective_shares(const ExperimentConfig& cfg) {
  std::map<std::string, double> shares;
  std::size_t n_explicit = 0;
  for (const TwinSource& t : cfg.twins)
    if (t.share >= 0.0) ++n_explicit;
  if (n_explicit != 0 && n_explicit != cfg.twins.size())
    throw ConfigError("either every twin specifies a share or none does");
  for (const TwinSource& t : cfg.twins)
    shares[t.tag] = n_explicit ? t.share : 1.0 / static_cast<double>(cfg.twins.size());
  return shares;
}

std::vector<int> load_coarse_map(const std::string& path, int class_count) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open coarse map: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("coarse map is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_array()) throw ConfigError("coarse map must be a JSON array (fine -> coarse)");
  std::vector<int> map = j.get<std::vector<int>>();
  if (static_cast<int>(map.size()) != class_count)
    throw ConfigError("coarse map length must equal data.class_count");
  return map;
}

}  // namespace esrm::cli
