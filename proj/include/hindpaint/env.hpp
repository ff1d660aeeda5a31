#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "hindpaint/canvas.hpp"
#include "hindpaint/perception.hpp"
#include "hindpaint/policy.hpp"
#include "hindpaint/rng.hpp"

namespace hindpaint {

// nonneg: continue while r >= 0; strict_pos: continue while r > 0.
enum class StopRule { kNonNegative, kStrictlyPositive };

const char* to_string(StopRule rule);
StopRule parse_stop_rule(const std::string& s);

struct EnvConfig {
  PatchSpec patch{41, 41};
  int max_steps = 50;
  double gamma = 0.9;
  int grace_steps = 5;
  StopRule stop_rule = StopRule::kNonNegative;
  std::uint64_t seed = 0;
  int max_radius = 8;

  // Throws InvalidArgument on out-of-range fields.
  void validate() const;
  StrokeModel stroke_model() const;
};

nlohmann::json to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const nlohmann::json& j, const std::string& path = "env");

enum class StartMode { kBlank, kRandom, kGiven };

const char* to_string(StartMode mode);
StartMode parse_start_mode(const std::string& s);

struct StartSpec {
  StartMode mode = StartMode::kBlank;
  Color fill = kWhite;   // kBlank
  Canvas canvas;         // kGiven

  static StartSpec blank(Color fill = kWhite) { return {StartMode::kBlank, fill, {}}; }
  static StartSpec random() { return {StartMode::kRandom, kWhite, {}}; }
  static StartSpec given(Canvas c) { return {StartMode::kGiven, kWhite, std::move(c)}; }
};

struct Transition {
  Observation obs;
  BrushAction action;
  ActionVector pre_squash{};
  double log_prob = 0.0;
  double reward = 0.0;
  Observation next_obs;
  bool done = false;
};

struct Episode {
  Canvas goal;
  std::vector<Canvas> states;        // s_0 .. s_T
  std::vector<BrushState> brushes;   // brush position at each state
  std::vector<Transition> transitions;
  double initial_loss = 0.0;
  std::uint64_t seed = 0;

  std::size_t length() const { return transitions.size(); }
  double total_reward() const;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
};

// Single painting episode over one goal image.
class PaintEnv {
 public:
  // Equivalent to reset(). Start canvas per StartSpec (random uses
  // random_canvas(seed)); brush placed uniformly at random. Throws
  // DegenerateEpisode if the start already equals the goal.
  PaintEnv(const EnvConfig& config, Canvas goal, const StartSpec& start);

  const EnvConfig& config() const { return config_; }
  const Canvas& goal() const { return goal_; }
  const Canvas& canvas() const { return canvas_; }
  BrushState brush() const { return brush_; }
  const Observation& observation() const { return obs_; }
  int t() const { return t_; }
  bool done() const { return done_; }
  double initial_loss() const { return initial_loss_; }
  double current_loss() const { return loss_; }

  // Renders, rewards and re-observes. Done once t > grace_steps and the
  // reward violates the stop rule, or t == max_steps. Throws
  // ContractViolation when called after done.
  StepResult step(const BrushAction& action);

 private:
  EnvConfig config_;
  StrokeModel stroke_;
  Canvas goal_;
  Canvas global_goal_;
  Canvas canvas_;
  BrushState brush_;
  Observation obs_;
  int t_ = 0;
  bool done_ = false;
  double initial_loss_ = 0.0;
  double loss_ = 0.0;
};

std::pair<PaintEnv, Observation> reset(const EnvConfig& config, Canvas goal,
                                       const StartSpec& start);

bool violates(StopRule rule, double reward);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual SampledAction act(const Observation& obs, Rng& rng) const = 0;
};

// Uniform actions over [0,1]^6.
class RandomPolicy final : public Policy {
 public:
  SampledAction act(const Observation& obs, Rng& rng) const override;
};

// Reads a parameter snapshot; stochastic samples the distribution, otherwise
// the distribution mean is used.
class NetworkPolicy final : public Policy {
 public:
  NetworkPolicy(const NetParams& params, bool stochastic)
      : params_(params), stochastic_(stochastic) {}
  SampledAction act(const Observation& obs, Rng& rng) const override;

 private:
  const NetParams& params_;
  bool stochastic_;
};

// Runs a_t = policy(o_{t-1}) until done. The policy stream is seeded from
// the env seed, so (config, goal, start, policy) determine the episode.
Episode rollout(const Policy& policy, PaintEnv& env);

// N independent env slots stepped as a batch.
class VecEnv {
 public:
  VecEnv() = default;
  explicit VecEnv(std::vector<PaintEnv> envs) : envs_(std::move(envs)) {}

  std::size_t size() const { return envs_.size(); }
  PaintEnv& operator[](std::size_t i) { return envs_[i]; }
  const PaintEnv& operator[](std::size_t i) const { return envs_[i]; }
  void replace(std::size_t i, PaintEnv env) { envs_[i] = std::move(env); }

  // OpenMP over slots. Throws InvalidArgument on length mismatch and
  // ContractViolation if any slot is done.
  std::vector<StepResult> step(std::span<const BrushAction> actions);
  std::vector<StepResult> step_serial(std::span<const BrushAction> actions);

 private:
  void check(std::span<const BrushAction> actions) const;
  std::vector<PaintEnv> envs_;
};

// One full rollout per slot, in parallel. Element i is slot i's episode.
std::vector<Episode> vec_rollout(const Policy& policy, std::vector<PaintEnv>& envs);

// Line-delimited replay record: header (config, start, seed, hashes), one
// line per action, then a trailer with the final canvas hash.
struct EpisodeLog {
  EnvConfig config;
  StartMode start_mode = StartMode::kBlank;
  Color fill = kWhite;
  std::uint64_t goal_hash = 0;
  std::uint64_t start_hash = 0;
  std::uint64_t final_hash = 0;
  std::vector<BrushAction> actions;
};

EpisodeLog make_episode_log(const Episode& ep, const EnvConfig& config,
                            const StartSpec& start);
void write_episode_log(const std::filesystem::path& path, const EpisodeLog& log);
EpisodeLog read_episode_log(const std::filesystem::path& path);

// Replays the logged actions. Throws IntegrityError when the goal, start or
// final canvas hash differs from the log.
Episode replay_episode(const EpisodeLog& log, const Canvas& goal,
                       const std::optional<Canvas>& given_start = std::nullopt);

}  // namespace hindpaint
