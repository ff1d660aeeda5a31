#include "hindpaint/perception.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hindpaint/error.hpp"
#include "hindpaint/kernels.hpp"

namespace hindpaint {

namespace {

void require_same_shape(const Canvas& a, const Canvas& b, const char* what) {
  if (!a.same_shape(b)) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" +
                          std::to_string(a.height()) + "x" +
                          std::to_string(a.width()) + " vs " +
                          std::to_string(b.height()) + "x" +
                          std::to_string(b.width()) + ")");
  }
}

void require_fits(const Canvas& canvas, const PatchSpec& spec) {
  if (spec.height < 1 || spec.width < 1 || spec.height > canvas.height() ||
      spec.width > canvas.width()) {
    throw InvalidArgument("patch " + std::to_string(spec.height) + "x" +
                          std::to_string(spec.width) +
                          " does not fit canvas " +
                          std::to_string(canvas.height()) + "x" +
                          std::to_string(canvas.width()));
  }
}

// Overlap weights of output cell i over input cells, for one axis.
struct AxisWeights {
  int first;
  std::vector<double> weights;
};

std::vector<AxisWeights> axis_weights(int in, int out) {
  std::vector<AxisWeights> axes(out);
  const double scale = static_cast<double>(in) / out;
  for (int i = 0; i < out; ++i) {
    const double lo = i * scale;
    const double hi = (i + 1) * scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
    axes[i].first = first;
    for (int k = first; k <= last; ++k) {
      const double w = std::min(hi, k + 1.0) - std::max(lo, static_cast<double>(k));
      axes[i].weights.push_back(w);
    }
  }
  return axes;
}

}  // namespace

BrushState patch_origin(int canvas_h, int canvas_w, BrushState center,
                        const PatchSpec& spec) {
  const int top = std::clamp(center.row - spec.height / 2, 0, canvas_h - spec.height);
  const int left = std::clamp(center.col - spec.width / 2, 0, canvas_w - spec.width);
  return {top, left};
}

Canvas extract_patch(const Canvas& canvas, BrushState center,
                     const PatchSpec& spec) {
  require_fits(canvas, spec);
  const BrushState origin = patch_origin(canvas.height(), canvas.width(), center, spec);
  Canvas patch(spec.height, spec.width);
  const auto src = canvas.data();
  auto dst = patch.data();
  const std::size_t row_len = static_cast<std::size_t>(spec.width) * 3;
  for (int y = 0; y < spec.height; ++y) {
    const std::size_t s = (static_cast<std::size_t>(origin.row + y) * canvas.width() + origin.col) * 3;
    std::copy_n(src.begin() + s, row_len, dst.begin() + y * row_len);
  }
  return patch;
}

Canvas downsample_area(const Canvas& canvas, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw InvalidArgument("downsample target must be >= 1");
  if (out_h == canvas.height() && out_w == canvas.width()) return canvas;
  const auto rows = axis_weights(canvas.height(), out_h);
  const auto cols = axis_weights(canvas.width(), out_w);
  Canvas out(out_h, out_w);
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      double acc[3] = {0.0, 0.0, 0.0};
      double area = 0.0;
      for (std::size_t a = 0; a < rows[i].weights.size(); ++a) {
        const int y = rows[i].first + static_cast<int>(a);
        for (std::size_t b = 0; b < cols[j].weights.size(); ++b) {
          const int x = cols[j].first + static_cast<int>(b);
          const double w = rows[i].weights[a] * cols[j].weights[b];
          for (int c = 0; c < 3; ++c) acc[c] += w * canvas.at(y, x, c);
          area += w;
        }
      }
      for (int c = 0; c < 3; ++c) {
        out.at(i, j, c) = static_cast<float>(std::clamp(acc[c] / area, 0.0, 1.0));
      }
    }
  }
  return out;
}

Observation observe_with_global_ref(const Canvas& canvas, const Canvas& goal,
                                    const Canvas& global_ref, BrushState brush,
                                    const PatchSpec& spec) {
  require_same_shape(canvas, goal, "observe");
  require_fits(canvas, spec);
  Observation obs;
  obs.ego_canvas = extract_patch(canvas, brush, spec);
  obs.global_canvas = downsample_area(canvas, spec.height, spec.width);
  obs.ego_ref = extract_patch(goal, brush, spec);
  obs.global_ref = global_ref;
  obs.brush = brush;
  return obs;
}

Observation observe(const Canvas& canvas, const Canvas& goal, BrushState brush,
                    const PatchSpec& spec) {
  require_same_shape(canvas, goal, "observe");
  require_fits(canvas, spec);
  return observe_with_global_ref(canvas, goal,
                                 downsample_area(goal, spec.height, spec.width),
                                 brush, spec);
}

double l2_loss(const Canvas& a, const Canvas& b) {
  require_same_shape(a, b, "l2_loss");
  return kernels::sum_squared_diff(a.data(), b.data()) /
         static_cast<double>(a.size());
}

double improvement_reward(double prev_loss, double curr_loss,
                          double initial_loss) {
  if (!(initial_loss > kDegenerateLoss)) {
    throw DegenerateEpisode("initial loss " + std::to_string(initial_loss) +
                            " is degenerate");
  }
  return (prev_loss - curr_loss) / initial_loss;
}

double step_reward(const Canvas& prev, const Canvas& curr, const Canvas& goal,
                   double initial_loss) {
  return improvement_reward(l2_loss(prev, goal), l2_loss(curr, goal), initial_loss);
}

}  // namespace hindpaint
