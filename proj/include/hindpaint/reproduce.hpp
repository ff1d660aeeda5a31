#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hindpaint/canvas.hpp"
#include "hindpaint/env.hpp"
#include "hindpaint/perception.hpp"
#include "hindpaint/policy.hpp"

namespace hindpaint {

struct RuntimeConfig {
  double thresh_sim = 0.01;
  int max_total_strokes = 1000;
  PatchSpec patch{41, 41};
  std::uint64_t seed = 0;
  int max_radius = 8;
  // Strokes painted from one sampled position before a forced resample.
  int strokes_per_position = 20;
  Color fill = kWhite;

  void validate() const;
};

nlohmann::json to_json(const RuntimeConfig& cfg);
RuntimeConfig runtime_config_from_json(const nlohmann::json& j, const std::string& path = "runtime");

enum class PaintStatus { kConverged, kBudgetExhausted };

const char* to_string(PaintStatus s);

struct StrokeEntry {
  BrushState brush;   // position the stroke starts from
  bool resampled = false;
  BrushAction action;
  bool operator==(const StrokeEntry&) const = default;
};

struct StrokeLog {
  RuntimeConfig config;
  int height = 0;
  int width = 0;
  std::uint64_t reference_hash = 0;
  std::uint64_t start_hash = 0;
  std::uint64_t final_hash = 0;
  std::vector<StrokeEntry> strokes;
};

struct PaintResult {
  Canvas canvas;
  StrokeLog log;
  // loss_trace[0] is the start loss, loss_trace[i] the loss after stroke i.
  std::vector<double> loss_trace;
  PaintStatus status = PaintStatus::kConverged;
  double final_loss = 0.0;
  int resamples = 0;
};

// Patch-wise painting of a reference of any size >= the patch. Positions are
// drawn uniformly; from each one the agent paints with mean actions while
// V(o) >= 0 (the first stroke after a resample is always painted), for at
// most strokes_per_position strokes. Stops once the loss falls below
// thresh_sim or the stroke budget is spent. Throws NumericError on
// non-finite parameters.
PaintResult paint_image(const NetParams& params, const Canvas& reference,
                        const RuntimeConfig& cfg);
PaintResult paint_image(const NetParams& params, const Canvas& reference,
                        const RuntimeConfig& cfg, const Canvas& start);

struct ReplayResult {
  Canvas canvas;
  std::vector<double> loss_trace;  // empty when no reference was given
};

// Re-renders the logged strokes over a blank canvas (or `start`) and checks
// the start and final hashes. With a reference, its hash is checked too and
// the loss trace is recomputed. Mismatches throw IntegrityError.
ReplayResult replay_strokes(const StrokeLog& log);
ReplayResult replay_strokes(const StrokeLog& log, const Canvas& reference);
ReplayResult replay_strokes(const StrokeLog& log, const Canvas& reference, const Canvas& start);

void save_stroke_log(const std::filesystem::path& path, const StrokeLog& log);
StrokeLog load_stroke_log(const std::filesystem::path& path);

void write_loss_trace_csv(std::ostream& out, std::span<const double> trace);
void write_loss_trace_csv(const std::filesystem::path& path, std::span<const double> trace);

struct BenchmarkPatch {
  Canvas goal;
  Canvas start;
};

struct PatchMetrics {
  double cumulative_reward = 0.0;
  double final_l2 = 0.0;
  double initial_l2 = 0.0;
  std::int64_t steps = 0;
  bool degenerate = false;  // start equals goal; excluded from the means
  EpisodeLog log;
};

struct BenchmarkMetrics {
  std::vector<PatchMetrics> patches;
  double mean_cumulative_reward = 0.0;
  double mean_final_l2 = 0.0;
  std::int64_t evaluated = 0;
};

// Rolls out mean actions on every patch under the env's stop rule and grace
// period. Patch i uses env seed mix_seed(env.seed, i). Patches run in
// parallel. Throws InvalidArgument for an empty set.
BenchmarkMetrics evaluate_benchmark(const NetParams& params, std::span<const BenchmarkPatch> patches,
                                    const EnvConfig& env);

}  // namespace hindpaint
