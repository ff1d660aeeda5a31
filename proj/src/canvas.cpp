#include "hindpaint/canvas.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hindpaint/error.hpp"
#include "hindpaint/hash.hpp"
#include "hindpaint/rng.hpp"

namespace hindpaint {

Canvas::Canvas(int height, int width, Color fill)
    : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw InvalidArgument("canvas dimensions must be >= 1, got " +
                          std::to_string(height) + "x" +
                          std::to_string(width));
  }
  pixels_.resize(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

std::uint64_t Canvas::hash() const {
  Fnv1a h;
  h.update_value(static_cast<std::int32_t>(height_));
  h.update_value(static_cast<std::int32_t>(width_));
  h.update(pixels_.data(), pixels_.size() * sizeof(float));
  return h.digest();
}

namespace {

double clamp01(double v) {
  if (!(v >= 0.0)) return 0.0;  // also catches NaN
  return v > 1.0 ? 1.0 : v;
}

float clamp01f(double v) { return static_cast<float>(clamp01(v)); }

void stamp_disc(Canvas& canvas, double center_row, double center_col,
                int radius, Color color) {
  const double r2 = static_cast<double>(radius) * radius;
  const int row_lo = std::max(0, static_cast<int>(std::floor(center_row - radius)));
  const int row_hi = std::min(canvas.height() - 1,
                              static_cast<int>(std::ceil(center_row + radius)));
  const int col_lo = std::max(0, static_cast<int>(std::floor(center_col - radius)));
  const int col_hi = std::min(canvas.width() - 1,
                              static_cast<int>(std::ceil(center_col + radius)));
  for (int y = row_lo; y <= row_hi; ++y) {
    const double dy = y - center_row;
    for (int x = col_lo; x <= col_hi; ++x) {
      const double dx = x - center_col;
      if (dy * dy + dx * dx <= r2) canvas.set_pixel(y, x, color);
    }
  }
}

}  // namespace

BrushAction BrushAction::clamped() const {
  return {clamp01(dh), clamp01(dw), clamp01(width),
          clamp01(r),  clamp01(g),  clamp01(b)};
}

StrokeModel StrokeModel::for_patch(int patch_h, int patch_w, int max_radius) {
  return {max_radius, patch_h / 2.0, patch_w / 2.0};
}

int StrokeModel::radius_for(double width) const {
  const double w = clamp01(width);
  return static_cast<int>(std::lround(1.0 + w * (max_radius - 1)));
}

Canvas blank_canvas(int height, int width, Color fill) {
  return Canvas(height, width, fill);
}

Canvas random_canvas(int height, int width, std::uint64_t seed) {
  Canvas canvas(height, width);
  Rng rng(seed);
  for (float& v : canvas.data()) v = static_cast<float>(uniform01(rng));
  return canvas;
}

BrushState clamp_to_canvas(BrushState brush, int height, int width) {
  return {std::clamp(brush.row, 0, height - 1),
          std::clamp(brush.col, 0, width - 1)};
}

BrushState render_action_inplace(Canvas& canvas, BrushState brush,
                                 const BrushAction& action,
                                 const StrokeModel& model) {
  const BrushAction a = action.clamped();
  const BrushState start = clamp_to_canvas(brush, canvas.height(), canvas.width());
  const int off_h = static_cast<int>(std::lround((2.0 * a.dh - 1.0) * model.max_offset_h));
  const int off_w = static_cast<int>(std::lround((2.0 * a.dw - 1.0) * model.max_offset_w));
  const BrushState end = clamp_to_canvas({start.row + off_h, start.col + off_w},
                                         canvas.height(), canvas.width());

  const int radius = model.radius_for(a.width);
  const Color color{clamp01f(a.r), clamp01f(a.g), clamp01f(a.b)};

  const double dy = end.row - start.row;
  const double dx = end.col - start.col;
  const int steps = static_cast<int>(std::ceil(std::sqrt(dy * dy + dx * dx)));
  if (steps == 0) {
    stamp_disc(canvas, start.row, start.col, radius, color);
  } else {
    for (int k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) / steps;
      stamp_disc(canvas, start.row + t * dy, start.col + t * dx, radius, color);
    }
  }
  return end;
}

RenderResult render_action(const Canvas& canvas, BrushState brush,
                           const BrushAction& action, const StrokeModel& model) {
  RenderResult out{canvas, brush};
  out.brush = render_action_inplace(out.canvas, brush, action, model);
  return out;
}

}  // namespace hindpaint
