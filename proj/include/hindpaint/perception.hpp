#pragma once

#include "hindpaint/canvas.hpp"

namespace hindpaint {

struct PatchSpec {
  int height = 41;
  int width = 41;
  bool operator==(const PatchSpec&) const = default;
};

// Four equally sized tiles: egocentric and global views of the canvas and of
// the goal, plus the brush position they were taken at.
struct Observation {
  Canvas ego_canvas;
  Canvas global_canvas;
  Canvas ego_ref;
  Canvas global_ref;
  BrushState brush;
  bool operator==(const Observation&) const = default;
};

inline constexpr double kDegenerateLoss = 1e-8;

// Top-left corner of the patch window centered at `center`. Windows that
// would overhang an edge are shifted inward so they lie fully on-canvas.
BrushState patch_origin(int canvas_h, int canvas_w, BrushState center,
                        const PatchSpec& spec);

// Throws InvalidArgument when the spec is empty or larger than the canvas.
Canvas extract_patch(const Canvas& canvas, BrushState center,
                     const PatchSpec& spec);

// Area-weighted box downsampling (or identity when sizes match).
Canvas downsample_area(const Canvas& canvas, int out_h, int out_w);

// Ego tiles via extract_patch, global tiles via downsample_area.
// Throws InvalidArgument if canvas and goal differ in shape.
Observation observe(const Canvas& canvas, const Canvas& goal, BrushState brush,
                    const PatchSpec& spec);

// Same as observe() with the goal's global tile supplied by the caller; the
// goal tile depends only on the goal, so episodes compute it once.
Observation observe_with_global_ref(const Canvas& canvas, const Canvas& goal,
                                    const Canvas& global_ref, BrushState brush,
                                    const PatchSpec& spec);

// Mean over all h*w*c entries of squared differences.
double l2_loss(const Canvas& a, const Canvas& b);

// (prev_loss - curr_loss) / initial_loss. Throws DegenerateEpisode when
// initial_loss <= kDegenerateLoss.
double improvement_reward(double prev_loss, double curr_loss,
                          double initial_loss);

double step_reward(const Canvas& prev, const Canvas& curr, const Canvas& goal,
                   double initial_loss);

}  // namespace hindpaint
