#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "esrm/image.hpp"

namespace esrm::plot {

struct Rgb {
  float r, g, b;
};

inline constexpr Rgb kBlue{0.22f, 0.42f, 0.85f};
inline constexpr Rgb kOrange{0.95f, 0.55f, 0.15f};
inline constexpr Rgb kGray{0.55f, 0.55f, 0.55f};

// Minimal raster plotter: axes with numeric tick labels, polylines and bar
// pairs, written out as PNG. Enough for the diagnostic curves; anything
// fancier should go through the emitted TSV files and a real plotting tool.
class Figure {
public:
  Figure(int width, int height, std::string x_label = "", std::string y_label = "");

  void set_ranges(double x_min, double x_max, double y_min, double y_max);
  void polyline(const std::vector<std::pair<double, double>>& pts, Rgb color);
  // Two interleaved bar series over [x_min, x_max] split into bins.
  void bar_pair(const std::vector<double>& series_a, const std::vector<double>& series_b,
                Rgb color_a, Rgb color_b);
  void save(const std::string& path);

private:
  void draw_axes();
  void line_px(int x0, int y0, int x1, int y1, Rgb c);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  void draw_number(double v, int x, int y, Rgb c);
  int px_of_x(double x) const;
  int px_of_y(double y) const;

  Image img_;
  int margin_ = 36;
  double x_min_ = 0.0, x_max_ = 1.0, y_min_ = 0.0, y_max_ = 1.0;
  std::string x_label_, y_label_;
};

}  // namespace esrm::plot
