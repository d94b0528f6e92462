#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "esrm/image.hpp"

namespace esrm::data {

enum class Provenance { real, synthetic };

inline const char* to_string(Provenance p) {
  return p == Provenance::real ? "real" : "synthetic";
}

inline Provenance provenance_from_string(const std::string& s) {
  if (s == "real") return Provenance::real;
  if (s == "synthetic") return Provenance::synthetic;
  throw std::runtime_error("unknown provenance: " + s);
}

// One image with label, provenance and a stable id. Image storage is shared
// so Samples copy cheaply when assembled into tasks and buffers.
struct Sample {
  long id = -1;
  ImagePtr image;
  int label = -1;         // fine label
  int coarse_label = -1;  // set only for DIL streams
  Provenance provenance = Provenance::real;
  std::string source_tag;  // generator tag; empty for real samples
};

struct LabeledDataset {
  std::string name;
  int class_count = 0;
  std::vector<std::string> class_names;  // label -> directory name
  std::vector<Sample> samples;

  std::vector<std::size_t> indices_of_class(int label) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
      if (samples[i].label == label) out.push_back(i);
    return out;
  }
};

}  // namespace esrm::data
