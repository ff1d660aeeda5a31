#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"

#include "hindpaint/error.hpp"
#include "hindpaint/reproduce.hpp"

using namespace hindpaint;

namespace {

NetParams agent(std::uint64_t seed) {
  return init_params(NetArch::compact(16), {seed, 1.0, 1.0, -0.5});
}

RuntimeConfig runtime(std::uint64_t seed, int budget) {
  RuntimeConfig rc;
  rc.patch = {8, 8};
  rc.max_radius = 3;
  rc.max_total_strokes = budget;
  rc.seed = seed;
  return rc;
}

}  // namespace

TEST_CASE("matching reference needs no strokes") {
  const auto r = paint_image(agent(1), blank_canvas(20, 20), runtime(1, 50));
  CHECK(r.log.strokes.empty());
  CHECK(r.status == PaintStatus::kConverged);
  CHECK(r.loss_trace == std::vector<double>{0.0});
}

TEST_CASE("painting is deterministic and replays exactly") {
  const Canvas ref = random_canvas(24, 30, 5);
  const auto a = paint_image(agent(2), ref, runtime(3, 120));
  const auto b = paint_image(agent(2), ref, runtime(3, 120));
  CHECK(a.canvas == b.canvas);
  CHECK(a.log.strokes == b.log.strokes);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(static_cast<int>(a.log.strokes.size()) <= 120);
  CHECK(a.loss_trace.size() == a.log.strokes.size() + 1);
  if (a.final_loss >= a.log.config.thresh_sim) CHECK(a.status == PaintStatus::kBudgetExhausted);
  CHECK(a.final_loss == l2_loss(a.canvas, ref));

  const ReplayResult blind = replay_strokes(a.log);
  CHECK(blind.canvas == a.canvas);
  CHECK(blind.loss_trace.empty());

  const ReplayResult full = replay_strokes(a.log, ref);
  CHECK(full.canvas == a.canvas);
  REQUIRE(full.loss_trace.size() == a.loss_trace.size());
  for (std::size_t i = 0; i < full.loss_trace.size(); ++i)
    CHECK(std::abs(full.loss_trace[i] - a.loss_trace[i]) <= 1e-12);

  CHECK_THROWS_AS(replay_strokes(a.log, random_canvas(24, 30, 6)), IntegrityError);
  StrokeLog tampered = a.log;
  REQUIRE(!tampered.strokes.empty());
  tampered.strokes.back().action.r = 1.0 - tampered.strokes.back().action.r;
  CHECK_THROWS_AS(replay_strokes(tampered), IntegrityError);
}

TEST_CASE("painting from a given start") {
  const Canvas ref = random_canvas(16, 16, 8);
  const Canvas start = random_canvas(16, 16, 9);
  const auto r = paint_image(agent(3), ref, runtime(1, 40), start);
  CHECK(r.loss_trace.front() == l2_loss(start, ref));
  CHECK(replay_strokes(r.log, ref, start).canvas == r.canvas);
  CHECK_THROWS_AS(replay_strokes(r.log, ref), IntegrityError);
}

TEST_CASE("stroke budget is never exceeded") {
  for (int budget : {1, 7, 33}) {
    const auto r = paint_image(agent(4), random_canvas(20, 20, 2), runtime(9, budget));
    CHECK(static_cast<int>(r.log.strokes.size()) <= budget);
  }
}

TEST_CASE("non-finite parameters are rejected") {
  NetParams p = agent(5);
  p.value.params()[3] = std::nan("");
  CHECK_THROWS_AS(paint_image(p, random_canvas(16, 16, 1), runtime(0, 10)), NumericError);
}

TEST_CASE("stroke log round trip") {
  const Canvas ref = random_canvas(16, 16, 4);
  const auto r = paint_image(agent(6), ref, runtime(2, 25));
  const auto path = std::filesystem::temp_directory_path() / "hindpaint_test.strokes.json";
  save_stroke_log(path, r.log);
  const StrokeLog back = load_stroke_log(path);
  CHECK(back.strokes == r.log.strokes);
  CHECK(back.final_hash == r.log.final_hash);
  CHECK(replay_strokes(back, ref).canvas == r.canvas);
  std::filesystem::remove(path);
}

TEST_CASE("loss trace csv") {
  std::ostringstream out;
  const std::vector<double> trace{0.5, 0.25};
  write_loss_trace_csv(out, trace);
  CHECK(out.str() == "stroke,l2_loss\n0,0.5\n1,0.25\n");
}

TEST_CASE("runtime config validation") {
  RuntimeConfig rc;
  rc.thresh_sim = 0.0;
  CHECK_THROWS(rc.validate());
  rc = RuntimeConfig{};
  rc.max_total_strokes = 0;
  CHECK_THROWS(rc.validate());
}

TEST_CASE("benchmark metrics agree with replayed episodes") {
  std::vector<BenchmarkPatch> patches;
  for (std::uint64_t i = 0; i < 12; ++i) {
    patches.push_back({random_canvas(16, 16, 100 + i),
                       i % 3 ? blank_canvas(16, 16) : random_canvas(16, 16, 200 + i)});
  }
  patches.push_back({blank_canvas(16, 16), blank_canvas(16, 16)});  // degenerate
  EnvConfig env;
  env.patch = {8, 8};
  env.max_radius = 3;
  env.seed = 77;
  const NetParams p = agent(7);
  const auto m = evaluate_benchmark(p, patches, env);
  const auto again = evaluate_benchmark(p, patches, env);
  CHECK(m.mean_cumulative_reward == again.mean_cumulative_reward);
  CHECK(m.mean_final_l2 == again.mean_final_l2);
  CHECK(m.evaluated == 12);
  CHECK(m.patches.back().degenerate);

  double reward_sum = 0.0, l2_sum = 0.0;
  for (std::size_t i = 0; i + 1 < patches.size(); ++i) {
    const Episode ep = replay_episode(m.patches[i].log, patches[i].goal, patches[i].start);
    double total = 0.0;
    for (std::size_t t = 0; t < ep.length(); ++t)
      total += step_reward(ep.states[t], ep.states[t + 1], patches[i].goal, ep.initial_loss);
    CHECK(std::abs(total - m.patches[i].cumulative_reward) <= 1e-12);
    CHECK(l2_loss(ep.states.back(), patches[i].goal) == m.patches[i].final_l2);
    CHECK(static_cast<std::int64_t>(ep.length()) == m.patches[i].steps);
    reward_sum += m.patches[i].cumulative_reward;
    l2_sum += m.patches[i].final_l2;
  }
  CHECK(std::abs(m.mean_cumulative_reward - reward_sum / 12.0) <= 1e-12);
  CHECK(std::abs(m.mean_final_l2 - l2_sum / 12.0) <= 1e-12);
  CHECK_THROWS_AS(evaluate_benchmark(p, {}, env), InvalidArgument);
}
