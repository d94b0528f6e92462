#include "esrm/data/dataset_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace esrm::data {

namespace {

void check_uniform_size(const LabeledDataset& ds) {
  if (ds.samples.empty()) return;
  const Image& first = *ds.samples.front().image;
  for (const Sample& s : ds.samples) {
    if (s.image->h != first.h || s.image->w != first.w || s.image->c != first.c)
      throw std::runtime_error("inconsistent image sizes in dataset " + ds.name);
  }
}

LabeledDataset load_from_manifest(const std::string& root, int expected_class_count,
                                  const fs::path& manifest) {
  LabeledDataset ds;
  ds.name = fs::path(root).filename().string();
  ds.class_count = expected_class_count;

  std::ifstream in(manifest);
  std::string line;
  std::vector<std::string> class_names(static_cast<std::size_t>(expected_class_count));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    Sample s;
    s.id = rec.at("id").get<long>();
    s.label = rec.at("label").get<int>();
    s.provenance = provenance_from_string(rec.at("provenance").get<std::string>());
    s.source_tag = rec.value("source_tag", std::string());
    if (s.label < 0 || s.label >= expected_class_count)
      throw std::runtime_error("manifest label out of range in " + ds.name);
    const std::string rel = rec.at("path").get<std::string>();
    s.image = std::make_shared<Image>(load_png((fs::path(root) / rel).string()));
    class_names[static_cast<std::size_t>(s.label)] = fs::path(rel).begin()->string();
    ds.samples.push_back(std::move(s));
  }
  ds.class_names = std::move(class_names);
  check_uniform_size(ds);
  return ds;
}

}  // namespace

LabeledDataset load_dataset(const std::string& root, int expected_class_count,
                            Provenance default_provenance, const std::string& default_tag) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset root not found: " + root);

  const fs::path manifest = fs::path(root) / kManifestName;
  if (fs::exists(manifest)) return load_from_manifest(root, expected_class_count, manifest);

  std::vector<std::string> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
  std::sort(class_dirs.begin(), class_dirs.end());

  if (class_dirs.empty()) throw std::runtime_error("no class directories in " + root);
  if (static_cast<int>(class_dirs.size()) != expected_class_count)
    throw std::runtime_error("expected " + std::to_string(expected_class_count) +
                             " class directories in " + root + ", found " +
                             std::to_string(class_dirs.size()));

  LabeledDataset ds;
  ds.name = fs::path(root).filename().string();
  ds.class_count = expected_class_count;
  ds.class_names = class_dirs;

  long next_id = 0;
  for (int label = 0; label < expected_class_count; ++label) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(fs::path(root) / class_dirs[label]))
      if (e.is_regular_file()) files.push_back(e.path().filename().string());
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) {
      Sample s;
      s.id = next_id++;
      s.label = label;
      s.provenance = default_provenance;
      s.source_tag = default_tag;
      s.image = std::make_shared<Image>(
          load_png((fs::path(root) / class_dirs[label] / f).string()));
      ds.samples.push_back(std::move(s));
    }
  }
  check_uniform_size(ds);
  return ds;
}

void save_dataset(const LabeledDataset& ds, const std::string& root) {
  fs::create_directories(root);
  std::ofstream manifest(fs::path(root) / kManifestName);
  if (!manifest) throw std::runtime_error("cannot write manifest in " + root);

  for (const Sample& s : ds.samples) {
    const std::string cls = ds.class_names.empty()
                                ? "class_" + std::to_string(s.label)
                                : ds.class_names[static_cast<std::size_t>(s.label)];
    fs::create_directories(fs::path(root) / cls);
    char fname[32];
    std::snprintf(fname, sizeof(fname), "%06ld.png", s.id);
    const std::string rel = cls + "/" + fname;
    save_png((fs::path(root) / rel).string(), *s.image);

    json rec;
    rec["id"] = s.id;
    rec["path"] = rel;
    rec["label"] = s.label;
    rec["provenance"] = to_string(s.provenance);
    rec["source_tag"] = s.source_tag;
    manifest << rec.dump() << "\n";
  }
}

}  // namespace esrm::data
