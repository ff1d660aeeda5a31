#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace hindpaint {

struct Color {
  float r = 1.0f;
  float g = 1.0f;
  float b = 1.0f;
  bool operator==(const Color&) const = default;
};

inline constexpr Color kWhite{1.0f, 1.0f, 1.0f};
inline constexpr Color kBlack{0.0f, 0.0f, 0.0f};

// H x W x 3 image of normalized RGB values, row-major, channels interleaved.
// Used for the painting surface, the reference image and every patch/tile.
class Canvas {
 public:
  Canvas() = default;
  // Throws InvalidArgument when either dimension is < 1.
  Canvas(int height, int width, Color fill = kWhite);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  float at(int row, int col, int channel) const {
    return pixels_[index(row, col) + channel];
  }
  float& at(int row, int col, int channel) {
    return pixels_[index(row, col) + channel];
  }
  Color pixel(int row, int col) const {
    const std::size_t i = index(row, col);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set_pixel(int row, int col, Color c) {
    const std::size_t i = index(row, col);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }

  std::span<const float> data() const { return pixels_; }
  std::span<float> data() { return pixels_; }

  bool same_shape(const Canvas& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  bool operator==(const Canvas&) const = default;

  // Content hash over dimensions and raw channel bits.
  std::uint64_t hash() const;

 private:
  std::size_t index(int row, int col) const {
    return (static_cast<std::size_t>(row) * width_ + col) * 3;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<float> pixels_;
};

inline constexpr int kActionDim = 6;

// Normalized stroke command: brush offset, stroke width and RGB color.
struct BrushAction {
  double dh = 0.5;
  double dw = 0.5;
  double width = 0.0;
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  std::array<double, kActionDim> as_array() const {
    return {dh, dw, width, r, g, b};
  }
  static BrushAction from_array(std::span<const double, kActionDim> v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
  // Every component clamped into [0,1]; NaN maps to 0.
  BrushAction clamped() const;
  bool operator==(const BrushAction&) const = default;
};

// Brush position in pixel coordinates.
struct BrushState {
  int row = 0;
  int col = 0;
  bool operator==(const BrushState&) const = default;
};

// Raster parameters of the stroke model.
//   radius      = round(1 + width * (max_radius - 1))
//   offset_{h,w} = round((2 v - 1) * max_offset_{h,w})
struct StrokeModel {
  int max_radius = 8;
  double max_offset_h = 20.5;
  double max_offset_w = 20.5;

  // Offsets reach half a patch side in each direction.
  static StrokeModel for_patch(int patch_h, int patch_w, int max_radius);

  int radius_for(double width) const;
};

struct RenderResult {
  Canvas canvas;
  BrushState brush;
};

Canvas blank_canvas(int height, int width, Color fill = kWhite);

// Uniform [0,1] channel values, deterministic in the seed.
Canvas random_canvas(int height, int width, std::uint64_t seed);

// Moves the brush by the action's offset (clamped to the canvas) and deposits
// opaque circular stamps of the action's color at unit spacing along the
// segment from the old to the new position. The input canvas is untouched.
RenderResult render_action(const Canvas& canvas, BrushState brush,
                           const BrushAction& action, const StrokeModel& model);

// In-place variant; returns the new brush position.
BrushState render_action_inplace(Canvas& canvas, BrushState brush,
                                 const BrushAction& action,
                                 const StrokeModel& model);

BrushState clamp_to_canvas(BrushState brush, int height, int width);

}  // namespace hindpaint
