#include "hindpaint/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include "hindpaint/benchmark.hpp"
#include "hindpaint/error.hpp"
#include "hindpaint/image_io.hpp"
#include "hindpaint/kernels.hpp"

namespace hindpaint {

namespace {

constexpr std::uint64_t kBenchImageSeed = 9;
constexpr std::uint64_t kBenchWindowSeed = 10;
constexpr std::uint64_t kEvalSeed = 11;
constexpr std::uint64_t kReplicateSeed = 100;

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  out << std::setprecision(17);
  return out;
}

void apply_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) kernels::set_threads(cfg.threads);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<Canvas> goals_or_config_error(const RunConfig& cfg) {
  try {
    return training_goals(cfg);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
}

TrainResult train_with_goals(const RunConfig& cfg, Scheme scheme, std::span<const Canvas> goals) {
  return train_pipeline(goals, cfg.env, cfg.bc, cfg.ppo, cfg.pipeline, scheme);
}

}  // namespace

TrainOutputs train_outputs(const std::filesystem::path& dir) {
  return {dir / "checkpoint.hpck", dir / "train_stats.jsonl", dir / "config.json"};
}

PaintOutputs paint_outputs(const std::filesystem::path& image) {
  return {image, image.string() + ".strokes.json", image.string() + ".loss.csv"};
}

TrainResult cmd_train(const RunConfig& cfg, Scheme scheme, const std::filesystem::path& out_dir) {
  apply_threads(cfg);
  const auto goals = goals_or_config_error(cfg);
  TrainResult result = train_with_goals(cfg, scheme, goals);
  ensure_dir(out_dir);
  const TrainOutputs files = train_outputs(out_dir);
  RunConfig resolved = cfg;
  resolved.scheme = scheme;
  save_checkpoint(files.checkpoint, result.params,
                  {{"env", to_json(cfg.env)}, {"runtime", to_json(cfg.runtime)}});
  auto stats = open_out(files.stats);
  write_train_stats(stats, result.history);
  auto conf = open_out(files.config);
  conf << to_json(resolved).dump(2) << '\n';
  return result;
}

PaintResult cmd_paint(const std::filesystem::path& checkpoint, const std::filesystem::path& reference,
                      const std::filesystem::path& out_image,
                      const std::optional<RuntimeConfig>& runtime) {
  const NetParams params = load_checkpoint(checkpoint);
  RuntimeConfig rc;
  if (runtime) {
    rc = *runtime;
  } else {
    const nlohmann::json extra = checkpoint_extra(checkpoint);
    if (extra.is_object() && extra.contains("runtime")) {
      rc = runtime_config_from_json(extra.at("runtime"), "checkpoint.runtime");
    } else {
      rc.patch = {params.arch.input_h / 2, params.arch.input_w / 2};
    }
  }
  const Canvas ref = load_image(reference);
  PaintResult res = paint_image(params, ref, rc);
  const PaintOutputs files = paint_outputs(out_image);
  save_image(res.canvas, files.image);
  save_stroke_log(files.strokes, res.log);
  write_loss_trace_csv(files.loss_trace, res.loss_trace);
  return res;
}

nlohmann::json BenchReport::summary() const {
  nlohmann::json table = nlohmann::json::object();
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      row[columns[c]] = {{"median_cumulative_reward", median_reward[s][c]},
                         {"median_final_l2", median_l2[s][c]}};
    }
    table[schemes[s]] = row;
  }
  nlohmann::json runs_json = nlohmann::json::array();
  for (const auto& r : runs) {
    runs_json.push_back({{"scheme", r.scheme},
                         {"replicate", r.replicate},
                         {"seed", r.seed},
                         {"env_steps", r.env_steps},
                         {"cumulative_reward", r.reward},
                         {"final_l2", r.l2}});
  }
  return {{"format", "hindpaint.bench"},
          {"version", 1},
          {"columns", columns},
          {"schemes", schemes},
          {"table", table},
          {"runs", runs_json}};
}

BenchReport cmd_bench(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  apply_threads(cfg);
  const auto goals = goals_or_config_error(cfg);
  const auto sources = load_images(cfg.bench.images, mix_seed(cfg.seed, kBenchImageSeed));

  BenchReport report;
  std::vector<std::vector<BenchmarkPatch>> sets;
  for (std::size_t k = 0; k < cfg.bench.start_modes.size(); ++k) {
    BenchmarkSpec spec{sources, cfg.bench.patch_count, cfg.bench.patch_size, cfg.bench.start_modes[k],
                       kWhite};
    try {
      sets.push_back(make_benchmark(spec, mix_seed(cfg.seed, kBenchWindowSeed)).patches);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("bench: ") + e.what());
    }
    report.columns.push_back("benchmark" + std::to_string(k + 1) + "_" +
                             to_string(cfg.bench.start_modes[k]));
  }
  EnvConfig eval_env = cfg.env;
  eval_env.seed = mix_seed(cfg.seed, kEvalSeed);
  eval_env.stop_rule = StopRule::kNonNegative;

  for (Scheme scheme : cfg.bench.schemes) {
    report.schemes.push_back(to_string(scheme));
    std::vector<std::vector<double>> rewards(sets.size());
    std::vector<std::vector<double>> l2s(sets.size());
    for (int r = 0; r < cfg.bench.replicates; ++r) {
      RunConfig rc = cfg;
      rc.seed = mix_seed(cfg.seed, kReplicateSeed + static_cast<std::uint64_t>(r));
      rc.derive_seeds();
      const TrainResult trained = train_with_goals(rc, scheme, goals);
      BenchRun run{to_string(scheme), r, rc.seed, trained.env_steps, {}, {}};
      for (std::size_t k = 0; k < sets.size(); ++k) {
        const BenchmarkMetrics m = evaluate_benchmark(trained.params, sets[k], eval_env);
        run.reward.push_back(m.mean_cumulative_reward);
        run.l2.push_back(m.mean_final_l2);
        rewards[k].push_back(m.mean_cumulative_reward);
        l2s[k].push_back(m.mean_final_l2);
      }
      report.runs.push_back(std::move(run));
    }
    std::vector<double> mr;
    std::vector<double> ml;
    for (std::size_t k = 0; k < sets.size(); ++k) {
      mr.push_back(median(rewards[k]));
      ml.push_back(median(l2s[k]));
    }
    report.median_reward.push_back(std::move(mr));
    report.median_l2.push_back(std::move(ml));
  }

  ensure_dir(out_dir);
  auto runs = open_out(out_dir / "bench_runs.csv");
  runs << "scheme,replicate,seed,env_steps";
  for (const auto& c : report.columns) runs << ',' << c << "_reward," << c << "_l2";
  runs << '\n';
  for (const auto& r : report.runs) {
    runs << r.scheme << ',' << r.replicate << ',' << r.seed << ',' << r.env_steps;
    for (std::size_t k = 0; k < r.reward.size(); ++k) runs << ',' << r.reward[k] << ',' << r.l2[k];
    runs << '\n';
  }
  auto table = open_out(out_dir / "bench_table.csv");
  table << "scheme";
  for (const auto& c : report.columns) table << ',' << c;
  table << '\n';
  for (std::size_t s = 0; s < report.schemes.size(); ++s) {
    table << report.schemes[s];
    for (double v : report.median_reward[s]) table << ',' << v;
    table << '\n';
  }
  auto summary = open_out(out_dir / "bench_summary.json");
  summary << report.summary().dump(2) << '\n';
  return report;
}

Canvas cmd_replay(const std::filesystem::path& log, const std::filesystem::path& out_image) {
  const StrokeLog strokes = load_stroke_log(log);
  ReplayResult r = replay_strokes(strokes);
  save_image(r.canvas, out_image);
  return std::move(r.canvas);
}

}  // namespace hindpaint
