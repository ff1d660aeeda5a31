#include <filesystem>

#include "doctest.h"

#include "hindpaint/env.hpp"
#include "hindpaint/error.hpp"
#include "hindpaint/perception.hpp"

using namespace hindpaint;

namespace {

EnvConfig small_config(std::uint64_t seed) {
  EnvConfig cfg;
  cfg.patch = {8, 8};
  cfg.max_radius = 3;
  cfg.max_steps = 20;
  cfg.seed = seed;
  return cfg;
}

bool same_episode(const Episode& a, const Episode& b) {
  if (a.states != b.states || a.brushes != b.brushes) return false;
  if (a.transitions.size() != b.transitions.size()) return false;
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    const auto& x = a.transitions[i];
    const auto& y = b.transitions[i];
    if (!(x.obs == y.obs && x.action == y.action && x.reward == y.reward &&
          x.next_obs == y.next_obs && x.done == y.done && x.log_prob == y.log_prob)) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("reset") {
  const EnvConfig cfg = small_config(3);
  CHECK_THROWS_AS(PaintEnv(cfg, blank_canvas(16, 16), StartSpec::blank()), DegenerateEpisode);

  const Canvas goal = random_canvas(16, 16, 1);
  PaintEnv a(cfg, goal, StartSpec::blank());
  PaintEnv b(cfg, goal, StartSpec::blank());
  CHECK(a.brush() == b.brush());
  CHECK(a.initial_loss() == l2_loss(blank_canvas(16, 16), goal));

  PaintEnv r(cfg, goal, StartSpec::random());
  CHECK(r.canvas() == random_canvas(16, 16, cfg.seed));

  const auto [env, obs] = reset(cfg, goal, StartSpec::blank());
  CHECK(obs == observe(env.canvas(), goal, env.brush(), cfg.patch));
}

TEST_CASE("repainting goal content is rewarded") {
  const EnvConfig cfg = small_config(5);
  const BrushAction a{0.8, 0.3, 0.6, 0.1, 0.2, 0.7};
  PaintEnv probe(cfg, random_canvas(16, 16, 2), StartSpec::blank());
  const Canvas goal =
      render_action(blank_canvas(16, 16), probe.brush(), a, cfg.stroke_model()).canvas;
  PaintEnv env(cfg, goal, StartSpec::blank());
  REQUIRE(env.brush() == probe.brush());
  const StepResult s = env.step(a);
  CHECK(s.reward == doctest::Approx(1.0));
  CHECK(env.current_loss() == 0.0);
}

TEST_CASE("stop rules and step cap") {
  EnvConfig cfg = small_config(7);
  cfg.grace_steps = 2;
  const Canvas goal = blank_canvas(16, 16, kBlack);
  PaintEnv env(cfg, goal, StartSpec::blank());
  // Black strokes on a black goal first improve, then become no-ops once the
  // region matches: a zero reward ends the episode past grace only under
  // strict_pos.
  const BrushAction still{0.5, 0.5, 0.0, 0.0, 0.0, 0.0};
  env.step(still);
  for (int t = 2; t <= cfg.grace_steps; ++t) CHECK_FALSE(env.step(still).done);
  const StepResult s = env.step(still);
  CHECK(s.reward == 0.0);
  CHECK_FALSE(s.done);  // nonneg keeps going on r = 0

  cfg.stop_rule = StopRule::kStrictlyPositive;
  PaintEnv strict(cfg, goal, StartSpec::blank());
  for (int t = 1; t <= cfg.grace_steps; ++t) strict.step(still);
  CHECK(strict.step(still).done);
  CHECK_THROWS_AS(strict.step(still), ContractViolation);

  EnvConfig capped = small_config(1);
  capped.max_steps = 3;
  PaintEnv c(capped, goal, StartSpec::blank());
  c.step(still);
  c.step(still);
  CHECK(c.step(still).done);
}

TEST_CASE("rollout invariants") {
  const RandomPolicy policy;
  for (std::uint64_t s = 0; s < 30; ++s) {
    EnvConfig cfg = small_config(s);
    const Canvas goal = random_canvas(16, 16, 100 + s);
    PaintEnv env(cfg, goal, s % 2 ? StartSpec::random() : StartSpec::blank());
    PaintEnv again = env;
    const Episode ep = rollout(policy, env);
    CHECK(ep.length() >= 1);
    CHECK(ep.length() <= static_cast<std::size_t>(cfg.max_steps));
    CHECK(ep.states.size() == ep.transitions.size() + 1);
    double sum = 0.0;
    for (std::size_t t = 0; t < ep.length(); ++t) {
      const double r = step_reward(ep.states[t], ep.states[t + 1], goal, ep.initial_loss);
      CHECK(ep.transitions[t].reward == r);
      if (static_cast<int>(t + 1) > cfg.grace_steps && t + 1 < ep.length()) {
        CHECK(ep.transitions[t].reward >= 0.0);
      }
      sum += r;
    }
    const double telescoped =
        (ep.initial_loss - l2_loss(ep.states.back(), goal)) / ep.initial_loss;
    CHECK(std::abs(sum - telescoped) <= 1e-9);
    CHECK(same_episode(ep, rollout(policy, again)));
  }
}

TEST_CASE("vectorized env matches scalar env") {
  const RandomPolicy policy;
  const EnvConfig cfg = small_config(42);
  const Canvas goal = random_canvas(16, 16, 1000);

  PaintEnv scalar(cfg, goal, StartSpec::random());
  const Episode ref = rollout(policy, scalar);
  std::vector<PaintEnv> one{PaintEnv(cfg, goal, StartSpec::random())};
  CHECK(same_episode(vec_rollout(policy, one)[0], ref));

  std::vector<PaintEnv> same(16, PaintEnv(cfg, goal, StartSpec::random()));
  const auto eps = vec_rollout(policy, same);
  for (const auto& e : eps) CHECK(same_episode(e, ref));

  std::vector<PaintEnv> distinct;
  for (std::uint64_t s = 0; s < 16; ++s) distinct.emplace_back(small_config(s), goal, StartSpec::random());
  const auto d = vec_rollout(policy, distinct);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) CHECK_FALSE(same_episode(d[i], d[j]));
}

TEST_CASE("vec step equals serial steps") {
  const EnvConfig base = small_config(0);
  std::vector<PaintEnv> envs;
  for (std::uint64_t s = 0; s < 8; ++s) {
    EnvConfig c = base;
    c.seed = s;
    envs.emplace_back(c, random_canvas(16, 16, s), StartSpec::blank());
  }
  VecEnv par(envs);
  VecEnv ser(envs);
  std::vector<BrushAction> actions;
  for (int i = 0; i < 8; ++i) actions.push_back({0.1 * i, 0.9 - 0.1 * i, 0.5, 0.2, 0.4, 0.6});
  const auto a = par.step(actions);
  const auto b = ser.step_serial(actions);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(a[i].obs == b[i].obs);
    CHECK(a[i].reward == b[i].reward);
    CHECK(envs[i].step(actions[i]).reward == a[i].reward);
  }
  CHECK_THROWS_AS(par.step(std::span<const BrushAction>(actions).first(3)), InvalidArgument);
}

TEST_CASE("episode log replays bit-exactly") {
  const RandomPolicy policy;
  const EnvConfig cfg = small_config(9);
  const Canvas goal = random_canvas(16, 16, 3);
  const StartSpec start = StartSpec::random();
  PaintEnv env(cfg, goal, start);
  const Episode ep = rollout(policy, env);
  const EpisodeLog log = make_episode_log(ep, cfg, start);

  const auto path = std::filesystem::temp_directory_path() / "hindpaint_test_episode.log";
  write_episode_log(path, log);
  const EpisodeLog back = read_episode_log(path);
  CHECK(back.actions == log.actions);
  const Episode replayed = replay_episode(back, goal);
  CHECK(replayed.states == ep.states);
  for (std::size_t t = 0; t < ep.length(); ++t)
    CHECK(replayed.transitions[t].reward == ep.transitions[t].reward);

  CHECK_THROWS_AS(replay_episode(back, random_canvas(16, 16, 4)), IntegrityError);
  std::filesystem::remove(path);
}
