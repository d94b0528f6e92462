#include "esrm/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace esrm::data {

namespace {

inline float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }

inline float luma(const Image& img, int y, int x) {
  return 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
}

// Reflection-pad by `pad`, then crop back to (h, w) at offset (dy, dx) with
// dy, dx in [0, 2*pad].
Image padded_crop(const Image& src, int pad, int dy, int dx) {
  Image out(src.h, src.w, src.c);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      int sy = y + dy - pad;
      int sx = x + dx - pad;
      // reflect without repeating the border pixel
      if (sy < 0) sy = -sy;
      if (sy >= src.h) sy = 2 * src.h - 2 - sy;
      if (sx < 0) sx = -sx;
      if (sx >= src.w) sx = 2 * src.w - 2 - sx;
      for (int ch = 0; ch < src.c; ++ch) out.at(y, x, ch) = src.at(sy, sx, ch);
    }
  }
  return out;
}

Image hflip(const Image& src) {
  Image out(src.h, src.w, src.c);
  for (int y = 0; y < src.h; ++y)
    for (int x = 0; x < src.w; ++x)
      for (int ch = 0; ch < src.c; ++ch) out.at(y, x, ch) = src.at(y, src.w - 1 - x, ch);
  return out;
}

void adjust_brightness(Image& img, float f) {
  for (float& v : img.px) v = clamp01(v * f);
}

void adjust_contrast(Image& img, float f) {
  double mean = 0.0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) mean += luma(img, y, x);
  const float m = static_cast<float>(mean / (static_cast<double>(img.h) * img.w));
  for (float& v : img.px) v = clamp01((v - m) * f + m);
}

void adjust_saturation(Image& img, float f) {
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const float l = luma(img, y, x);
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = clamp01((img.at(y, x, ch) - l) * f + l);
    }
}

// hue_shift is a fraction of the color circle in [-0.5, 0.5].
void adjust_hue(Image& img, float hue_shift) {
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      float r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
      const float mx = std::max({r, g, b});
      const float mn = std::min({r, g, b});
      const float delta = mx - mn;
      float h = 0.0f;
      if (delta > 0.0f) {
        if (mx == r)
          h = std::fmod((g - b) / delta, 6.0f);
        else if (mx == g)
          h = (b - r) / delta + 2.0f;
        else
          h = (r - g) / delta + 4.0f;
        h /= 6.0f;
        if (h < 0.0f) h += 1.0f;
      }
      const float s = mx > 0.0f ? delta / mx : 0.0f;
      const float v = mx;

      h = std::fmod(h + hue_shift + 1.0f, 1.0f);

      const float hh = h * 6.0f;
      const int sector = static_cast<int>(hh) % 6;
      const float frac = hh - std::floor(hh);
      const float p = v * (1.0f - s);
      const float q = v * (1.0f - s * frac);
      const float t = v * (1.0f - s * (1.0f - frac));
      switch (sector) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
      }
      img.at(y, x, 0) = clamp01(r);
      img.at(y, x, 1) = clamp01(g);
      img.at(y, x, 2) = clamp01(b);
    }
}

void to_grayscale(Image& img) {
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const float l = luma(img, y, x);
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = l;
    }
}

// Uniform in [1-amount, 1+amount].
float jitter_factor(Rng& rng, double amount) {
  return static_cast<float>(1.0 - amount + rng.uniform01() * 2.0 * amount);
}

}  // namespace

Image augment_image(const Image& src, const AugmentationPolicy& policy, Rng& rng) {
  Image img = src;

  if (rng.uniform01() < policy.crop_prob) {
    const int span = 2 * policy.crop_padding + 1;
    const int dy = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));
    const int dx = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(span)));
    img = padded_crop(img, policy.crop_padding, dy, dx);
  }
  if (rng.uniform01() < policy.flip_prob) img = hflip(img);

  if (policy.kind == AugmentationKind::full) {
    if (rng.uniform01() < policy.jitter_prob) {
      const float fb = jitter_factor(rng, policy.jitter_brightness);
      const float fc = jitter_factor(rng, policy.jitter_contrast);
      const float fs = jitter_factor(rng, policy.jitter_saturation);
      const float fh =
          static_cast<float>(-policy.jitter_hue + rng.uniform01() * 2.0 * policy.jitter_hue);
      adjust_brightness(img, fb);
      adjust_contrast(img, fc);
      adjust_saturation(img, fs);
      adjust_hue(img, fh);
    }
    if (rng.uniform01() < policy.grayscale_prob) to_grayscale(img);
  }
  return img;
}

Tensor assemble_batch(const std::vector<Sample>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const Image& first = *batch.front().image;
  Tensor out({static_cast<long>(batch.size()), first.c, first.h, first.w});
  float* dst = out.ptr();
  for (const Sample& s : batch) {
    const Image& img = *s.image;
    if (img.h != first.h || img.w != first.w || img.c != first.c)
      throw std::invalid_argument("batch images differ in shape");
    for (int ch = 0; ch < img.c; ++ch)
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) *dst++ = img.at(y, x, ch);
  }
  return out;
}

Tensor augment(const std::vector<Sample>& batch, const AugmentationPolicy& policy, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const Image& first = *batch.front().image;
  Tensor out({static_cast<long>(batch.size()), first.c, first.h, first.w});
  float* dst = out.ptr();
  for (const Sample& s : batch) {
    const Image img = augment_image(*s.image, policy, rng);
    for (int ch = 0; ch < img.c; ++ch)
      for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) *dst++ = img.at(y, x, ch);
  }
  return out;
}

std::vector<int> labels_of(const std::vector<Sample>& batch, SplitMode mode) {
  std::vector<int> labels;
  labels.reserve(batch.size());
  for (const Sample& s : batch) labels.push_back(effective_label(s, mode));
  return labels;
}

}  // namespace esrm::data
