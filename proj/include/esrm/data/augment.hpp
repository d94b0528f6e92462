#pragma once

#include <vector>

#include "esrm/data/tasks.hpp"
#include "esrm/rng.hpp"
#include "esrm/tensor.hpp"

namespace esrm::data {

enum class AugmentationKind { partial, full };

// Partial strategy: random crop then random horizontal flip. Full strategy
// additionally applies color jitter and random grayscale. Crop uses
// reflection padding (4 px for 32x32 inputs) followed by a crop back to the
// original size.
struct AugmentationPolicy {
  AugmentationKind kind = AugmentationKind::partial;
  double crop_prob = 0.5;
  int crop_padding = 4;
  double flip_prob = 0.5;
  double jitter_prob = 0.8;
  double jitter_brightness = 0.4;
  double jitter_contrast = 0.4;
  double jitter_saturation = 0.4;
  double jitter_hue = 0.1;
  double grayscale_prob = 0.2;
};

Image augment_image(const Image& src, const AugmentationPolicy& policy, Rng& rng);

// Applies the policy per image (independent draws) and packs the result as
// an NCHW batch tensor.
Tensor augment(const std::vector<Sample>& batch, const AugmentationPolicy& policy, Rng& rng);

// NCHW batch tensor of the raw images, no augmentation.
Tensor assemble_batch(const std::vector<Sample>& batch);

std::vector<int> labels_of(const std::vector<Sample>& batch, SplitMode mode);

}  // namespace esrm::data
