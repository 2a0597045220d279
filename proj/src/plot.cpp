#include "kgan/plot.hpp"

#include "kgan/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kgan {

namespace {

constexpr int kWidth = 480;
constexpr int kHeight = 320;
constexpr int kMargin = 24;

void draw_line(ImageGray& img, double x0, double y0, double x1, double y1,
               double shade) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int steps = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (x >= 0 && x < img.width && y >= 0 && y < img.height) img(y, x) = shade;
  }
}

}  // namespace

void render_history_plot(const TrainingHistory& history, const std::string& path) {
  if (history.empty())
    throw std::invalid_argument("render_history_plot: empty history");

  ImageGray img(kHeight, kWidth);
  img.pixels.setConstant(1.0);  // white background

  double lo = history[0].loss_g, hi = history[0].loss_g;
  for (const EpochRecord& r : history) {
    lo = std::min({lo, r.loss_g, r.loss_d});
    hi = std::max({hi, r.loss_g, r.loss_d});
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double x_left = kMargin, x_right = kWidth - kMargin;
  const double y_top = kMargin, y_bottom = kHeight - kMargin;
  auto x_of = [&](std::size_t i) {
    return history.size() == 1
               ? (x_left + x_right) / 2.0
               : x_left + (x_right - x_left) * static_cast<double>(i) /
                              static_cast<double>(history.size() - 1);
  };
  auto y_of = [&](double v) {
    return y_bottom - (y_bottom - y_top) * (v - lo) / (hi - lo);
  };

  draw_line(img, x_left, y_bottom, x_right, y_bottom, 0.0);
  draw_line(img, x_left, y_top, x_left, y_bottom, 0.0);

  for (std::size_t i = 1; i < history.size(); ++i) {
    draw_line(img, x_of(i - 1), y_of(history[i - 1].loss_d), x_of(i),
              y_of(history[i].loss_d), 0.55);
    draw_line(img, x_of(i - 1), y_of(history[i - 1].loss_g), x_of(i),
              y_of(history[i].loss_g), 0.0);
  }
  save_pgm(img, path);
}

}  // namespace kgan
