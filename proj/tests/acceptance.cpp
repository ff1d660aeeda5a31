// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance [--only 1,2,...] [--config configs/desk.json] [--work DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "bandit.hpp"
#include "hindpaint/archive.hpp"
#include "hindpaint/benchmark.hpp"
#include "hindpaint/commands.hpp"
#include "hindpaint/error.hpp"
#include "hindpaint/image_io.hpp"
#include "support.hpp"

using namespace hindpaint;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Context {
  fs::path config;
  fs::path work;
  // Filled by criterion 8 and reused by criterion 9.
  std::optional<BenchReport> bench;
};

EnvConfig tiny_env(std::uint64_t seed) {
  EnvConfig cfg;
  cfg.patch = {8, 8};
  cfg.max_radius = 3;
  cfg.max_steps = 50;
  cfg.seed = seed;
  return cfg;
}

// 1. Relabeled rewards telescope to one and the relabeled goal is reached.
Outcome telescoping(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  const RandomPolicy policy;
  int checked = 0, degenerate = 0;
  double worst = 0.0;
  bool exact = true;
  for (std::uint64_t e = 0; e < 200; ++e) {
    EnvConfig cfg = tiny_env(mix_seed(1, e));
    cfg.stop_rule = e % 2 ? StopRule::kNonNegative : StopRule::kStrictlyPositive;
    PaintEnv env(cfg, random_canvas(16, 16, mix_seed(2, e)), e % 3 ? StartSpec::blank() : StartSpec::random());
    const Episode ep = rollout(policy, env);
    std::vector<RelabeledSample> s;
    try {
      s = relabel_episode(ep, cfg.patch, cfg.gamma);
    } catch (const DegenerateEpisode&) {
      ++degenerate;
      continue;
    }
    double sum = 0.0;
    for (const auto& x : s) sum += x.reward_hat;
    worst = std::max(worst, std::abs(sum - 1.0));
    exact = exact && l2_loss(ep.states.back(), ep.states.back()) == 0.0 &&
            s.back().obs_hat.global_ref == downsample_area(ep.states.back(), 8, 8);
    ++checked;
  }
  const double dt = seconds_since(t0);
  return {checked > 0 && worst <= 1e-9 && exact && dt < 60.0,
          fmt("%d episodes relabeled (%d degenerate skipped), max |sum r^ - 1| = %.2e, %.1fs",
              checked, degenerate, worst, dt)};
}

// 2. l2_loss against a per-element oracle.
Outcome loss_oracle(Context&) {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Canvas a = random_canvas(8, 8, 2 * s + 11);
    const Canvas b = random_canvas(8, 8, 2 * s + 12);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a.data()[i]) - b.data()[i];
      sum += d * d;
    }
    worst = std::max(worst, std::abs(l2_loss(a, b) - sum / static_cast<double>(a.size())));
  }
  const Canvas r = random_canvas(8, 8, 1);
  const bool edges = l2_loss(r, r) == 0.0 &&
                     l2_loss(blank_canvas(8, 8, kBlack), blank_canvas(8, 8, kWhite)) == 1.0;
  return {worst <= 1e-12 && edges, fmt("max deviation %.2e over 100 pairs, edge cases %s", worst,
                                       edges ? "exact" : "WRONG")};
}

// 3. Analytic gradients against central differences.
Outcome gradients(Context&) {
  ConvNet net(testing::shrunken_arch(), 6);
  net.init(5, 1.0);
  Rng rng(9);
  std::vector<float> in(net.input_size());
  for (auto& v : in) v = static_cast<float>(uniform01(rng));
  const auto r = testing::finite_difference_check(net, in, 40, 1, 1e-4);
  bool every_layer = true;
  for (int n : r.per_layer) every_layer = every_layer && n > 0;
  return {r.coordinates >= 100 && every_layer && r.max_rel_error <= 1e-3,
          fmt("%d coordinates over %zu layers (conv, dense, head), max rel error %.2e",
              r.coordinates, r.per_layer.size(), r.max_rel_error)};
}

nlohmann::json small_run() {
  return nlohmann::json::parse(R"({
    "seed": 31,
    "env": {"patch": 8, "max_radius": 3},
    "network": {"kind": "compact", "filters": 8, "hidden": 32},
    "bc": {"epochs": 2},
    "ppo": {"rollout_batch": 256, "minibatch_size": 64, "epochs_per_batch": 2},
    "pipeline": {"env_steps": 1200},
    "runtime": {"max_total_strokes": 200},
    "train": {"images": {"synthetic": {"count": 4, "height": 32, "width": 32}},
              "goals": 32, "goal_size": 16},
    "bench": {"images": {"synthetic": {"count": 2, "height": 32, "width": 32}},
              "patch_count": 20, "patch_size": 16, "replicates": 2}
  })");
}

// 4. Bit-identical reruns and exact replay.
Outcome determinism(Context& ctx) {
  RunConfig cfg = run_config_from_json(small_run());
  cfg.derive_seeds();
  const fs::path dir = ctx.work / "determinism";
  fs::remove_all(dir);
  bool ok = true;
  std::string failed;
  auto expect = [&](bool c, const char* what) {
    if (!c) failed += std::string(failed.empty() ? "" : ", ") + what;
    ok = ok && c;
  };
  for (const char* run : {"a", "b"}) cmd_train(cfg, Scheme::kCombined, dir / run);
  expect(slurp(train_outputs(dir / "a").stats) == slurp(train_outputs(dir / "b").stats), "train stats");
  expect(read_file_bytes(train_outputs(dir / "a").checkpoint) ==
             read_file_bytes(train_outputs(dir / "b").checkpoint),
         "checkpoint");

  const Canvas ref = quantize_8bit(synthetic_painting(40, 40, 77));
  save_image(ref, dir / "ref.png");
  const fs::path ckpt = train_outputs(dir / "a").checkpoint;
  const auto p1 = cmd_paint(ckpt, dir / "ref.png", dir / "p1.ppm");
  cmd_paint(ckpt, dir / "ref.png", dir / "p2.ppm");
  expect(slurp(paint_outputs(dir / "p1.ppm").strokes) == slurp(paint_outputs(dir / "p2.ppm").strokes),
         "stroke logs");
  cmd_replay(paint_outputs(dir / "p1.ppm").strokes, dir / "replay.ppm");
  expect(read_file_bytes(dir / "replay.ppm") == read_file_bytes(dir / "p1.ppm"), "replayed image");
  const auto rep = replay_strokes(p1.log, ref);
  expect(rep.canvas == p1.canvas && rep.loss_trace == p1.loss_trace, "replayed trace");

  cmd_bench(cfg, dir / "bench_a");
  cmd_bench(cfg, dir / "bench_b");
  expect(slurp(dir / "bench_a" / "bench_summary.json") == slurp(dir / "bench_b" / "bench_summary.json"),
         "bench metrics");
  return {ok, ok ? fmt("train stats, %zu-stroke logs, bench metrics identical; replay bit-exact",
                       p1.log.strokes.size())
                 : "mismatch in " + failed};
}

bool same_episode(const Episode& a, const Episode& b) {
  if (a.states != b.states || a.transitions.size() != b.transitions.size()) return false;
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    const auto& x = a.transitions[i];
    const auto& y = b.transitions[i];
    if (!(x.obs == y.obs && x.action == y.action && x.reward == y.reward && x.done == y.done)) return false;
  }
  return true;
}

// 5. Vectorized rollouts equal scalar rollouts.
Outcome vectorization(Context&) {
  const RandomPolicy policy;
  const Canvas goal = random_canvas(16, 16, 500);
  const EnvConfig cfg = tiny_env(3);
  PaintEnv scalar(cfg, goal, StartSpec::random());
  const Episode ref = rollout(policy, scalar);
  std::vector<PaintEnv> one{PaintEnv(cfg, goal, StartSpec::random())};
  const bool single = same_episode(vec_rollout(policy, one)[0], ref);
  std::vector<PaintEnv> many(16, PaintEnv(cfg, goal, StartSpec::random()));
  const auto eps = vec_rollout(policy, many);
  int identical = 0;
  for (const auto& e : eps) identical += same_episode(e, ref);
  return {single && identical == 16,
          fmt("N=1 %s scalar (%zu steps); %d/16 slots identical", single ? "equals" : "DIFFERS FROM",
              ref.length(), identical)};
}

// 6. Behavior cloning reduces loss and overfits one sample.
Outcome behavior_cloning(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Canvas> goals;
  for (int i = 0; i < 16; ++i) goals.push_back(random_canvas(16, 16, mix_seed(60, i)));
  const std::vector<StartSpec> starts{StartSpec::blank(), StartSpec::random()};
  EnvConfig env = tiny_env(61);
  env.stop_rule = StopRule::kStrictlyPositive;
  const SelfSupervisedDataset all = build_dataset_for_budget(RandomPolicy{}, goals, env, 2000, starts);
  // 500 samples that survive the reward filter.
  SelfSupervisedDataset data;
  for (const auto& s : all.samples)
    if (s.reward_hat > 0.0 && data.size() < 500) data.samples.push_back(s);
  if (data.size() < 500) throw std::runtime_error("not enough positive hindsight samples");
  const NetArch arch = NetArch::compact(16);
  BCConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 32;
  cfg.learning_rate = 3e-3;
  const auto r = behavior_clone(init_params(arch, {62, 0.01, 1.0, -0.5}), data, cfg);
  const double reduction = 1.0 - r.epoch_losses.back() / r.epoch_losses.front();

  const BrushAction target{0.2, 0.8, 0.35, 0.6, 0.15, 0.7};
  SelfSupervisedDataset one;
  for (int i = 0; i < 64; ++i) one.samples.push_back({data.samples[0].obs_hat, target, 1.0, 1.0});
  BCConfig c1;
  c1.epochs = 150;
  c1.batch_size = 16;
  const auto o = behavior_clone(init_params(arch, {63, 0.01, 1.0, -0.5}), one, c1);
  const auto m = forward_policy(o.params, assemble_input(one.samples[0].obs_hat)).mean;
  double err = 0.0;
  for (int k = 0; k < kActionDim; ++k) err = std::max(err, std::abs(m[k] - target.as_array()[k]));
  const double dt = seconds_since(t0);
  return {reduction >= 0.9 && err <= 1e-2 && dt < 300.0,
          fmt("500-sample loss %.4f -> %.4f (%.1f%% reduction); single-sample max error %.2e; %.0fs",
              r.epoch_losses.front(), r.epoch_losses.back(), 100.0 * reduction, err, dt)};
}

// 7. PPO on a one-step bandit.
Outcome ppo_bandit(Context&) {
  const auto run = testing::run_bandit(200, 0.05, 1);
  return {run.first_within > 0 && run.final_error <= 0.05,
          fmt("within 0.05 after %d iterations; max error after 200: %.4f", run.first_within,
              run.final_error)};
}

// 8. Scheme ordering on the desk benchmark.
Outcome scheme_ordering(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg = load_run_config(ctx.config);
  cfg.derive_seeds();
  const BenchReport r = cmd_bench(cfg, ctx.work / "bench");
  const double dt = seconds_since(t0);
  ctx.bench = r;
  auto row = [&](const char* s) {
    for (std::size_t i = 0; i < r.schemes.size(); ++i)
      if (r.schemes[i] == s) return r.median_reward[i];
    throw std::runtime_error(std::string("scheme missing from report: ") + s);
  };
  const auto rl = row("rl_only"), ssl = row("ssl_only"), comb = row("combined");
  bool ok = dt <= 1800.0;
  std::string detail;
  for (std::size_t c = 0; c < r.columns.size(); ++c) {
    ok = ok && comb[c] > rl[c] && comb[c] > ssl[c];
    detail += fmt("%s combined %.4f rl_only %.4f ssl_only %.4f; ", r.columns[c].c_str(), comb[c],
                  rl[c], ssl[c]);
  }
  return {ok, detail + fmt("median of %d seeds, %.0fs", cfg.bench.replicates, dt)};
}

// 9. End-to-end painting with a combined agent.
Outcome end_to_end(Context& ctx) {
  RunConfig cfg = load_run_config(ctx.config);
  cfg.derive_seeds();
  cfg.runtime.max_total_strokes = 1000;
  const fs::path dir = ctx.work / "paint";
  fs::remove_all(dir);
  const TrainResult trained = cmd_train(cfg, Scheme::kCombined, dir);
  const Canvas image = quantize_8bit(training_images(cfg).front());
  save_image(image, dir / "train0.png");
  const PaintResult p = cmd_paint(train_outputs(dir).checkpoint, dir / "train0.png", dir / "painted.png",
                                  cfg.runtime);
  const double blank = l2_loss(blank_canvas(image.height(), image.width(), cfg.runtime.fill), image);
  const ReplayResult rep = replay_strokes(load_stroke_log(paint_outputs(dir / "painted.png").strokes), image);
  double drift = 0.0;
  for (std::size_t i = 0; i < rep.loss_trace.size(); ++i)
    drift = std::max(drift, std::abs(rep.loss_trace[i] - p.loss_trace[i]));
  const bool consistent = rep.canvas == p.canvas && rep.loss_trace.size() == p.loss_trace.size() &&
                          drift <= 1e-12;

  // Blank start against random start for this agent.
  const auto sources = load_images(cfg.bench.images, mix_seed(cfg.seed, 900));
  BenchmarkSpec spec{sources, cfg.bench.patch_count, cfg.bench.patch_size, StartMode::kRandom, kWhite};
  const auto b1 = make_benchmark(spec, mix_seed(cfg.seed, 901));
  spec.start_mode = StartMode::kBlank;
  const auto b2 = make_benchmark(spec, mix_seed(cfg.seed, 901));
  EnvConfig ev = cfg.env;
  ev.seed = mix_seed(cfg.seed, 902);
  ev.stop_rule = StopRule::kNonNegative;
  const double r1 = evaluate_benchmark(trained.params, b1.patches, ev).mean_cumulative_reward;
  const double r2 = evaluate_benchmark(trained.params, b2.patches, ev).mean_cumulative_reward;

  const bool ok = p.final_loss <= 0.7 * blank && consistent && r2 > r1;
  return {ok, fmt("%zu strokes, final L2 %.4f vs blank %.4f (ratio %.3f); replay drift %.1e; "
                  "blank-start reward %.4f vs random-start %.4f",
                  p.log.strokes.size(), p.final_loss, blank, p.final_loss / blank, drift, r2, r1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only;
  Context ctx;
  ctx.config = fs::path(HINDPAINT_SOURCE_DIR) / "configs" / "desk.json";
  ctx.work = fs::temp_directory_path() / "hindpaint_acceptance";
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--config", ctx.config, "desk configuration");
  app.add_option("--work", ctx.work, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(ctx.work);

  const std::vector<std::pair<const char*, std::function<Outcome(Context&)>>> criteria{
      {"hindsight telescoping", telescoping},   {"loss oracle", loss_oracle},
      {"gradient fidelity", gradients},         {"determinism", determinism},
      {"vectorization equivalence", vectorization}, {"behavior cloning", behavior_cloning},
      {"ppo bandit", ppo_bandit},               {"scheme ordering", scheme_ordering},
      {"end-to-end painting", end_to_end},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
