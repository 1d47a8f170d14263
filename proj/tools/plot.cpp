#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "acgan/image_io.hpp"

namespace acgan::plot {

namespace {

struct Canvas {
  int w, h;
  std::vector<std::uint8_t> px;

  Canvas(int w_, int h_) : w(w_), h(h_), px(static_cast<std::size_t>(w_) * h_ * 3, 255) {}

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    auto* p = &px[(static_cast<std::size_t>(y) * w + x) * 3];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void line(int x0, int y0, int x1, int y1, Rgb c) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) return;
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

  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y, c);
  }
};

}  // namespace

const std::array<Rgb, 4>& kind_colors() {
  static const std::array<Rgb, 4> c = {Rgb{31, 119, 180}, Rgb{44, 160, 44},
                                       Rgb{214, 39, 40}, Rgb{230, 180, 20}};
  return c;
}

void line_chart(const std::filesystem::path& path, const std::vector<Series>& series,
                int width, int height, bool log_y) {
  Canvas cv(width, height);
  const int left = 40, right = width - 20, top = 20, bottom = height - 30;
  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-12)) : v; };
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, ty(s.y[i]));
      y_hi = std::max(y_hi, ty(s.y[i]));
    }
  if (!(x_hi > x_lo)) x_hi = x_lo + 1;
  if (!(y_hi > y_lo)) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;
  auto px = [&](double x) {
    return left + static_cast<int>(std::lround((x - x_lo) / (x_hi - x_lo) * (right - left)));
  };
  auto py = [&](double y) {
    return bottom - static_cast<int>(std::lround((ty(y) - y_lo) / (y_hi - y_lo) * (bottom - top)));
  };
  const Rgb grey{160, 160, 160};
  cv.line(left, top, left, bottom, grey);
  cv.line(left, bottom, right, bottom, grey);
  cv.line(right, top, right, bottom, grey);
  cv.line(left, top, right, top, grey);
  if (!log_y && y_lo < 0 && y_hi > 0) {
    const int z = bottom - static_cast<int>(std::lround(-y_lo / (y_hi - y_lo) * (bottom - top)));
    for (int x = left; x < right; x += 6) cv.line(x, z, x + 2, z, grey);
  }
  for (const auto& s : series)
    for (std::size_t i = 1; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i - 1]) && std::isfinite(s.y[i]))
        cv.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), s.color);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const int x = right - 14 - 18 * static_cast<int>(k);
    cv.rect(x, top + 6, x + 10, top + 16, series[k].color);
  }
  write_png(path, Image8{width, height, 3, std::move(cv.px)});
}

}  // namespace acgan::plot
