#pragma once

#include <cstdint>

#include "esrm/data/sample.hpp"

namespace esrm::data {

// Procedural 10-class image benchmark for desk-scale experiments. Real
// samples are diverse renderings of class-specific oriented gratings plus a
// class-anchored disc (random phase, colors, noise, jitter). The synthetic
// twin mirrors the class structure with deliberately low diversity: each
// twin class consists of lightly perturbed copies of a handful of medoid
// images taken from the real class.
struct ToyConfig {
  int classes = 10;
  int per_class_train = 160;
  int per_class_test = 40;
  int image_size = 32;
  int twin_medoids = 10;
  std::uint64_t seed = 7;
};

struct ToySet {
  LabeledDataset train;
  LabeledDataset test;
  LabeledDataset twin;  // same per-class counts as train, synthetic provenance
};

ToySet make_toy_dataset(const ToyConfig& cfg);

}  // namespace esrm::data
