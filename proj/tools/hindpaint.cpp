// hindpaint command-line interface.
//
//   hindpaint train  --config run.json --scheme combined [--out DIR] [--seed N]
//   hindpaint paint  --checkpoint ckpt.hpck --reference ref.png --out out.png [--config run.json]
//   hindpaint bench  --config run.json [--out DIR] [--seed N]
//   hindpaint replay --log out.png.strokes.json --out replay.png
//
// Exit codes: 0 success, 1 other failure, 2 configuration, 3 I/O, 4 integrity.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hindpaint/commands.hpp"
#include "hindpaint/error.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kIo = 3, kIntegrity = 4 };

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
};

hindpaint::RunConfig resolve(const std::string& path, const Overrides& o) {
  hindpaint::RunConfig cfg = hindpaint::load_run_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.derive_seeds();
  return cfg;
}

void print_table(const hindpaint::BenchReport& r) {
  std::printf("%-10s", "scheme");
  for (const auto& c : r.columns) std::printf("  %20s", c.c_str());
  std::printf("\n");
  for (std::size_t s = 0; s < r.schemes.size(); ++s) {
    std::printf("%-10s", r.schemes[s].c_str());
    for (double v : r.median_reward[s]) std::printf("  %20.4f", v);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hindsight-relabeled painting agent"};
  app.require_subcommand(1);

  std::string config;
  std::string scheme;
  std::string checkpoint;
  std::string reference;
  std::string out;
  std::string log;
  Overrides ov;

  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--seed", ov.seed, "override the top-level seed");
    cmd->add_option("--threads", ov.threads, "OpenMP thread count");
    cmd->add_option("--out", ov.out, "output directory");
  };

  CLI::App* train = app.add_subcommand("train", "train one scheme and write a checkpoint");
  train->add_option("--config", config, "run configuration (JSON)")->required();
  train->add_option("--scheme", scheme, "rl_only, ssl_only or combined")
      ->check(CLI::IsMember({"rl_only", "ssl_only", "combined"}));
  add_overrides(train);

  CLI::App* paint = app.add_subcommand("paint", "reproduce a reference image");
  paint->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  paint->add_option("--reference", reference, "reference image (PPM or PNG)")->required();
  paint->add_option("--out", out, "output image (.ppm or .png)")->required();
  paint->add_option("--config", config, "run configuration supplying the runtime section");
  paint->add_option("--seed", ov.seed, "override the runtime seed source");

  CLI::App* bench = app.add_subcommand("bench", "compare training schemes on the benchmarks");
  bench->add_option("--config", config, "run configuration (JSON)")->required();
  add_overrides(bench);

  CLI::App* replay = app.add_subcommand("replay", "rebuild an image from a stroke log");
  replay->add_option("--log", log, "stroke log written by paint")->required();
  replay->add_option("--out", out, "output image (.ppm or .png)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (train->parsed()) {
      const auto cfg = resolve(config, ov);
      const auto s = scheme.empty() ? cfg.scheme : hindpaint::parse_scheme(scheme);
      const auto result = hindpaint::cmd_train(cfg, s, cfg.output_dir);
      const auto files = hindpaint::train_outputs(cfg.output_dir);
      std::printf("trained %s for %lld env steps; checkpoint %s\n", hindpaint::to_string(s),
                  static_cast<long long>(result.env_steps), files.checkpoint.string().c_str());
    } else if (paint->parsed()) {
      std::optional<hindpaint::RuntimeConfig> rc;
      if (!config.empty()) rc = resolve(config, ov).runtime;
      const auto res = hindpaint::cmd_paint(checkpoint, reference, out, rc);
      std::printf("%s after %zu strokes, final loss %.6f (start %.6f)\n",
                  hindpaint::to_string(res.status), res.log.strokes.size(), res.final_loss,
                  res.loss_trace.front());
      if (res.status == hindpaint::PaintStatus::kBudgetExhausted) {
        std::fprintf(stderr, "warning: stroke budget exhausted before reaching thresh_sim\n");
      }
    } else if (bench->parsed()) {
      const auto cfg = resolve(config, ov);
      const auto report = hindpaint::cmd_bench(cfg, cfg.output_dir);
      print_table(report);
    } else if (replay->parsed()) {
      hindpaint::cmd_replay(log, out);
      std::printf("replayed %s -> %s (hash verified)\n", log.c_str(), out.c_str());
    }
  } catch (const hindpaint::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const hindpaint::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const hindpaint::IntegrityError& e) {
    std::fprintf(stderr, "integrity error: %s\n", e.what());
    return kIntegrity;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
