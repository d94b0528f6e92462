#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "esrm/data/sample.hpp"

namespace esrm::data {

// How a real dataset is mixed with its synthetic twins. `source_shares` maps
// each twin tag to its share of the substituted portion; shares must sum
// to 1. The substitution is exact per class: with n_c real samples in class
// c, round(P * n_c) of them are replaced.
struct ContaminationSpec {
  double ratio_P = 0.0;
  std::map<std::string, double> source_shares;  // ordered by tag
  std::uint64_t seed = 0;
};

// Replaces a per-class exact fraction of `real` with samples drawn from the
// twin datasets. Output keeps the input's ordering and size; replaced
// positions carry the twin image, the same class label, and synthetic
// provenance with the contributing source tag. Ids are reassigned 0..N-1.
LabeledDataset contaminate(const LabeledDataset& real,
                           const std::map<std::string, LabeledDataset>& twins,
                           const ContaminationSpec& spec);

}  // namespace esrm::data
