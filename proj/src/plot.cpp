#include "esrm/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace esrm::plot {

namespace {

// 3x5 glyphs for digits plus '.', '-', 'e'; row-major bitmasks.
constexpr std::array<std::array<std::uint8_t, 5>, 13> kGlyphs = {{
    {0b111, 0b101, 0b101, 0b101, 0b111},  // 0
    {0b010, 0b110, 0b010, 0b010, 0b111},  // 1
    {0b111, 0b001, 0b111, 0b100, 0b111},  // 2
    {0b111, 0b001, 0b111, 0b001, 0b111},  // 3
    {0b101, 0b101, 0b111, 0b001, 0b001},  // 4
    {0b111, 0b100, 0b111, 0b001, 0b111},  // 5
    {0b111, 0b100, 0b111, 0b101, 0b111},  // 6
    {0b111, 0b001, 0b010, 0b010, 0b010},  // 7
    {0b111, 0b101, 0b111, 0b101, 0b111},  // 8
    {0b111, 0b101, 0b111, 0b001, 0b111},  // 9
    {0b000, 0b000, 0b000, 0b000, 0b010},  // .
    {0b000, 0b000, 0b111, 0b000, 0b000},  // -
    {0b111, 0b100, 0b110, 0b100, 0b111},  // e
}};

int glyph_index(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c == '.') return 10;
  if (c == '-') return 11;
  if (c == 'e' || c == 'E') return 12;
  return -1;
}

}  // namespace

Figure::Figure(int width, int height, std::string x_label, std::string y_label)
    : img_(height, width, 3), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {
  std::fill(img_.px.begin(), img_.px.end(), 1.0f);
}

void Figure::set_ranges(double x_min, double x_max, double y_min, double y_max) {
  x_min_ = x_min;
  x_max_ = x_max > x_min ? x_max : x_min + 1.0;
  y_min_ = y_min;
  y_max_ = y_max > y_min ? y_max : y_min + 1.0;
}

int Figure::px_of_x(double x) const {
  const double t = (x - x_min_) / (x_max_ - x_min_);
  return margin_ + static_cast<int>(t * (img_.w - 2 * margin_));
}

int Figure::px_of_y(double y) const {
  const double t = (y - y_min_) / (y_max_ - y_min_);
  return img_.h - margin_ - static_cast<int>(t * (img_.h - 2 * margin_));
}

void Figure::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  x0 = std::clamp(x0, 0, img_.w - 1);
  x1 = std::clamp(x1, 0, img_.w - 1);
  y0 = std::clamp(y0, 0, img_.h - 1);
  y1 = std::clamp(y1, 0, img_.h - 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      img_.at(y, x, 0) = c.r;
      img_.at(y, x, 1) = c.g;
      img_.at(y, x, 2) = c.b;
    }
}

void Figure::line_px(int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (x0 >= 0 && x0 < img_.w && y0 >= 0 && y0 < img_.h) {
      img_.at(y0, x0, 0) = c.r;
      img_.at(y0, x0, 1) = c.g;
      img_.at(y0, x0, 2) = c.b;
    }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Figure::draw_number(double v, int x, int y, Rgb c) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%g", v);
  int cx = x;
  for (const char* p = buf; *p; ++p) {
    const int gi = glyph_index(*p);
    if (gi >= 0) {
      for (int ry = 0; ry < 5; ++ry)
        for (int rx = 0; rx < 3; ++rx)
          if (kGlyphs[static_cast<std::size_t>(gi)][static_cast<std::size_t>(ry)] &
              (0b100 >> rx)) {
            const int px = cx + rx, py = y + ry;
            if (px >= 0 && px < img_.w && py >= 0 && py < img_.h) {
              img_.at(py, px, 0) = c.r;
              img_.at(py, px, 1) = c.g;
              img_.at(py, px, 2) = c.b;
            }
          }
    }
    cx += 4;
  }
}

void Figure::draw_axes() {
  const Rgb black{0.0f, 0.0f, 0.0f};
  line_px(margin_, margin_, margin_, img_.h - margin_, black);
  line_px(margin_, img_.h - margin_, img_.w - margin_, img_.h - margin_, black);
  for (int i = 0; i <= 4; ++i) {
    const double xv = x_min_ + (x_max_ - x_min_) * i / 4.0;
    const double yv = y_min_ + (y_max_ - y_min_) * i / 4.0;
    const int xp = px_of_x(xv), yp = px_of_y(yv);
    line_px(xp, img_.h - margin_, xp, img_.h - margin_ + 4, black);
    line_px(margin_ - 4, yp, margin_, yp, black);
    draw_number(xv, xp - 6, img_.h - margin_ + 7, black);
    draw_number(yv, 2, yp - 2, black);
  }
}

void Figure::polyline(const std::vector<std::pair<double, double>>& pts, Rgb color) {
  for (std::size_t i = 1; i < pts.size(); ++i)
    line_px(px_of_x(pts[i - 1].first), px_of_y(pts[i - 1].second), px_of_x(pts[i].first),
            px_of_y(pts[i].second), color);
}

void Figure::bar_pair(const std::vector<double>& series_a, const std::vector<double>& series_b,
                      Rgb color_a, Rgb color_b) {
  const std::size_t bins = std::max(series_a.size(), series_b.size());
  if (bins == 0) return;
  const double bin_w = (x_max_ - x_min_) / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    const double x0 = x_min_ + static_cast<double>(i) * bin_w;
    if (i < series_a.size() && series_a[i] > 0.0)
      fill_rect(px_of_x(x0), px_of_y(series_a[i]), px_of_x(x0 + 0.45 * bin_w), px_of_y(0.0),
                color_a);
    if (i < series_b.size() && series_b[i] > 0.0)
      fill_rect(px_of_x(x0 + 0.5 * bin_w), px_of_y(series_b[i]), px_of_x(x0 + 0.95 * bin_w),
                px_of_y(0.0), color_b);
  }
}

void Figure::save(const std::string& path) {
  draw_axes();
  save_png(path, img_);
}

}  // namespace esrm::plot
