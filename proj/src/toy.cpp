#include "esrm/data/toy.hpp"

#include <algorithm>
#include <cmath>

#include "esrm/rng.hpp"

namespace esrm::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

// One diverse class sample. The class is coded purely by the orientation of
// the dominant grating; everything else (frequency, phase, colors, contrast,
// a distractor grating, an optional distractor disc, pixel noise) varies per
// sample, so one-pass training on a handful of examples underfits the class
// manifold.
Image render_real(int cls, int n_classes, int size, Rng& rng) {
  const double theta = kPi * cls / n_classes + rng.normal(0.0, 0.05);
  const double freq = 0.10 + 0.20 * rng.uniform01();
  const double phase = rng.uniform01() * 2.0 * kPi;
  const double contrast = 0.45 + 0.55 * rng.uniform01();

  const double d_theta = rng.uniform01() * kPi;
  const double d_freq = 0.10 + 0.20 * rng.uniform01();
  const double d_phase = rng.uniform01() * 2.0 * kPi;
  const double d_weight = 0.30 * rng.uniform01();

  const double noise_sigma = 0.03 + 0.07 * rng.uniform01();

  float fg[3], bg[3], disc[3];
  for (int ch = 0; ch < 3; ++ch) {
    fg[ch] = static_cast<float>(rng.uniform01());
    bg[ch] = static_cast<float>(rng.uniform01());
    disc[ch] = static_cast<float>(rng.uniform01());
  }

  // distractor disc at a random position, present in half the samples
  const bool has_disc = rng.uniform01() < 0.3;
  const double cx = size * rng.uniform01();
  const double cy = size * rng.uniform01();
  const double radius = size * (0.08 + 0.08 * rng.uniform01());

  const double ct = std::cos(theta), st = std::sin(theta);
  const double dct = std::cos(d_theta), dst = std::sin(d_theta);
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double g = std::sin(2.0 * kPi * freq * (x * ct + y * st) + phase);
      const double d = std::sin(2.0 * kPi * d_freq * (x * dct + y * dst) + d_phase);
      const double signal = contrast * ((1.0 - d_weight) * g + d_weight * d);
      const float m = static_cast<float>(0.5 * (signal + 1.0));
      const bool in_disc =
          has_disc && (x - cx) * (x - cx) + (y - cy) * (y - cy) < radius * radius;
      for (int ch = 0; ch < 3; ++ch) {
        float v = in_disc ? disc[ch] : bg[ch] + (fg[ch] - bg[ch]) * m;
        v += static_cast<float>(rng.normal(0.0, noise_sigma));
        img.at(y, x, ch) = clamp01(v);
      }
    }
  return img;
}

// Light perturbation of a medoid with a characteristic generated-image look:
// a small blur wipes the real data's noise texture, then a small shift and
// brightness scaling with near-zero fresh noise. Low diversity by design.
Image render_twin(const Image& medoid, Rng& rng) {
  const int dy = static_cast<int>(rng.uniform_int(5)) - 2;
  const int dx = static_cast<int>(rng.uniform_int(5)) - 2;
  const float gain = static_cast<float>(0.95 + 0.1 * rng.uniform01());

  Image img(medoid.h, medoid.w, medoid.c);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      int sy = y + dy, sx = x + dx;
      if (sy < 0) sy = -sy;
      if (sy >= img.h) sy = 2 * img.h - 2 - sy;
      if (sx < 0) sx = -sx;
      if (sx >= img.w) sx = 2 * img.w - 2 - sx;
      for (int ch = 0; ch < img.c; ++ch) {
        // 3x3 box blur around the shifted source pixel
        float acc = 0.0f;
        int taps = 0;
        for (int oy = -1; oy <= 1; ++oy)
          for (int ox = -1; ox <= 1; ++ox) {
            const int by = sy + oy, bx = sx + ox;
            if (by < 0 || by >= img.h || bx < 0 || bx >= img.w) continue;
            acc += medoid.at(by, bx, ch);
            ++taps;
          }
        float v = (acc / static_cast<float>(taps)) * gain +
                  static_cast<float>(rng.normal(0.0, 0.005));
        img.at(y, x, ch) = clamp01(v);
      }
    }
  return img;
}

}  // namespace

ToySet make_toy_dataset(const ToyConfig& cfg) {
  ToySet set;
  set.train.name = "toy_train";
  set.test.name = "toy_test";
  set.twin.name = "toy_twin";
  for (LabeledDataset* ds : {&set.train, &set.test, &set.twin}) {
    ds->class_count = cfg.classes;
    for (int c = 0; c < cfg.classes; ++c) ds->class_names.push_back("c" + std::to_string(c));
  }

  long train_id = 0, test_id = 0, twin_id = 0;
  for (int c = 0; c < cfg.classes; ++c) {
    Rng rng(derive_seed(cfg.seed, 40000007ULL + static_cast<std::uint64_t>(c)));

    std::vector<ImagePtr> class_train;
    for (int i = 0; i < cfg.per_class_train; ++i)
      class_train.push_back(std::make_shared<Image>(
          render_real(c, cfg.classes, cfg.image_size, rng)));
    for (int i = 0; i < cfg.per_class_test; ++i) {
      Sample s;
      s.id = test_id++;
      s.label = c;
      s.image = std::make_shared<Image>(render_real(c, cfg.classes, cfg.image_size, rng));
      set.test.samples.push_back(std::move(s));
    }

    for (const ImagePtr& img : class_train) {
      Sample s;
      s.id = train_id++;
      s.label = c;
      s.image = img;
      set.train.samples.push_back(std::move(s));
    }

    // medoids: evenly spaced picks from the class pool
    std::vector<const Image*> medoids;
    const int m = std::min(cfg.twin_medoids, cfg.per_class_train);
    for (int i = 0; i < m; ++i)
      medoids.push_back(class_train[static_cast<std::size_t>(
                            i * cfg.per_class_train / m)].get());

    for (int i = 0; i < cfg.per_class_train; ++i) {
      Sample s;
      s.id = twin_id++;
      s.label = c;
      s.provenance = Provenance::synthetic;
      s.source_tag = "twin";
      const Image& medoid = *medoids[static_cast<std::size_t>(rng.uniform_int(
          static_cast<std::uint64_t>(medoids.size())))];
      s.image = std::make_shared<Image>(render_twin(medoid, rng));
      set.twin.samples.push_back(std::move(s));
    }
  }
  return set;
}

}  // namespace esrm::data
