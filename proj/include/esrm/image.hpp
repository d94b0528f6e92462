#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace esrm {

// HWC float image, values in [0, 1].
struct Image {
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<float> px;

  Image() = default;
  Image(int h_, int w_, int c_) : h(h_), w(w_), c(c_) {
    px.assign(static_cast<std::size_t>(h) * w * c, 0.0f);
  }

  float& at(int y, int x, int ch) { return px[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
  float at(int y, int x, int ch) const { return px[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
};

using ImagePtr = std::shared_ptr<const Image>;

// 8-bit PNG I/O (RGB or grayscale). Values are mapped to/from [0,1].
Image load_png(const std::string& path);
void save_png(const std::string& path, const Image& img);

}  // namespace esrm
