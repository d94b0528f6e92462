#pragma once

#include <string>

#include "esrm/data/sample.hpp"

namespace esrm::data {

// Directory layout: root/<class_name>/<file>.png, one subdirectory per class.
// If root/manifest.jsonl exists it is authoritative for ids, labels and
// provenance (a contaminated dataset cannot be reconstructed from the tree
// alone). Without a manifest, samples are enumerated lexicographically by
// class directory then filename, ids are assigned in that order, and every
// sample gets `default_provenance` / `default_tag`.
LabeledDataset load_dataset(const std::string& root, int expected_class_count,
                            Provenance default_provenance = Provenance::real,
                            const std::string& default_tag = "");

// Writes the class-directory tree of PNGs plus manifest.jsonl.
void save_dataset(const LabeledDataset& ds, const std::string& root);

inline constexpr const char* kManifestName = "manifest.jsonl";

}  // namespace esrm::data
