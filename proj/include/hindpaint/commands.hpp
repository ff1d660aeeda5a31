#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hindpaint/config.hpp"
#include "hindpaint/learn.hpp"
#include "hindpaint/reproduce.hpp"

namespace hindpaint {

// Files written by cmd_train under the output directory.
struct TrainOutputs {
  std::filesystem::path checkpoint;   // checkpoint.hpck
  std::filesystem::path stats;        // train_stats.jsonl
  std::filesystem::path config;       // config.json (resolved)
};

TrainOutputs train_outputs(const std::filesystem::path& dir);

// Trains `scheme` on the configured goals and writes checkpoint, stats and
// the resolved config.
TrainResult cmd_train(const RunConfig& cfg, Scheme scheme, const std::filesystem::path& out_dir);

struct PaintOutputs {
  std::filesystem::path image;
  std::filesystem::path strokes;      // <image>.strokes.json
  std::filesystem::path loss_trace;   // <image>.loss.csv
};

PaintOutputs paint_outputs(const std::filesystem::path& image);

// Runtime settings come from `runtime` when given, otherwise from the
// environment stored with the checkpoint.
PaintResult cmd_paint(const std::filesystem::path& checkpoint, const std::filesystem::path& reference,
                      const std::filesystem::path& out_image,
                      const std::optional<RuntimeConfig>& runtime = std::nullopt);

struct BenchRun {
  std::string scheme;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::int64_t env_steps = 0;
  std::vector<double> reward;   // per benchmark column
  std::vector<double> l2;
};

struct BenchReport {
  std::vector<std::string> columns;  // one per start mode, e.g. "benchmark1_random"
  std::vector<std::string> schemes;
  // median over replicates; [scheme][column]
  std::vector<std::vector<double>> median_reward;
  std::vector<std::vector<double>> median_l2;
  std::vector<BenchRun> runs;

  nlohmann::json summary() const;
};

// Trains every scheme for every replicate, evaluates on one benchmark per
// start mode and writes bench_runs.csv, bench_table.csv and
// bench_summary.json into out_dir.
BenchReport cmd_bench(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Rebuilds the image of a stroke log (verifying its hashes) and writes it.
Canvas cmd_replay(const std::filesystem::path& log, const std::filesystem::path& out_image);

}  // namespace hindpaint
