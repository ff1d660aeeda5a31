#include "hindpaint/env.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "hindpaint/error.hpp"
#include "hindpaint/hash.hpp"
#include "hindpaint/json_util.hpp"
#include "hindpaint/kernels.hpp"

namespace hindpaint {

namespace {

constexpr const char* kEpisodeFormat = "hindpaint.episode";
constexpr int kEpisodeVersion = 1;

// Sub-stream indices derived from an env seed.
constexpr std::uint64_t kBrushStream = 1;
constexpr std::uint64_t kPolicyStream = 2;

Canvas make_start(const Canvas& goal, const StartSpec& start, std::uint64_t seed) {
  switch (start.mode) {
    case StartMode::kBlank:
      return blank_canvas(goal.height(), goal.width(), start.fill);
    case StartMode::kRandom:
      return random_canvas(goal.height(), goal.width(), seed);
    case StartMode::kGiven:
      if (!start.canvas.same_shape(goal)) {
        throw InvalidArgument("given start canvas does not match the goal dimensions");
      }
      return start.canvas;
  }
  throw InvalidArgument("unknown start mode");
}

nlohmann::json action_json(const BrushAction& a) {
  return nlohmann::json(a.as_array());
}

BrushAction action_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != kActionDim) {
    throw IntegrityError("episode log action must be an array of 6 numbers");
  }
  ActionVector v{};
  for (int i = 0; i < kActionDim; ++i) v[i] = j.at(i).get<double>();
  return BrushAction::from_array(v);
}

}  // namespace

const char* to_string(StopRule rule) {
  return rule == StopRule::kNonNegative ? "nonneg" : "strict_pos";
}

StopRule parse_stop_rule(const std::string& s) {
  if (s == "nonneg") return StopRule::kNonNegative;
  if (s == "strict_pos") return StopRule::kStrictlyPositive;
  throw ConfigError("unknown stop rule '" + s + "' (expected nonneg or strict_pos)");
}

const char* to_string(StartMode mode) {
  switch (mode) {
    case StartMode::kBlank: return "blank";
    case StartMode::kRandom: return "random";
    case StartMode::kGiven: return "given";
  }
  return "?";
}

StartMode parse_start_mode(const std::string& s) {
  if (s == "blank") return StartMode::kBlank;
  if (s == "random") return StartMode::kRandom;
  if (s == "given") return StartMode::kGiven;
  throw ConfigError("unknown start mode '" + s + "'");
}

void EnvConfig::validate() const {
  if (patch.height < 1 || patch.width < 1) throw InvalidArgument("patch size must be >= 1");
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0,1]");
  if (grace_steps < 0) throw InvalidArgument("grace_steps must be >= 0");
  if (max_radius < 1) throw InvalidArgument("max_radius must be >= 1");
}

StrokeModel EnvConfig::stroke_model() const {
  return StrokeModel::for_patch(patch.height, patch.width, max_radius);
}

nlohmann::json to_json(const EnvConfig& c) {
  return {{"patch", {c.patch.height, c.patch.width}},
          {"max_steps", c.max_steps},
          {"gamma", c.gamma},
          {"grace_steps", c.grace_steps},
          {"stop_rule", to_string(c.stop_rule)},
          {"seed", c.seed},
          {"max_radius", c.max_radius}};
}

EnvConfig env_config_from_json(const nlohmann::json& j, const std::string& path) {
  StrictObject o(j, path);
  EnvConfig c;
  if (o.has("patch")) {
    const auto& p = o.child("patch");
    if (p.is_number_integer()) {
      c.patch = {p.get<int>(), p.get<int>()};
    } else if (p.is_array() && p.size() == 2 && p[0].is_number_integer() &&
               p[1].is_number_integer()) {
      c.patch = {p[0].get<int>(), p[1].get<int>()};
    } else {
      throw ConfigError(o.where("patch") + ": expected an integer or [h, w]");
    }
  }
  c.max_steps = o.optional<int>("max_steps", c.max_steps);
  c.gamma = o.optional<double>("gamma", c.gamma);
  c.grace_steps = o.optional<int>("grace_steps", c.grace_steps);
  c.stop_rule = parse_stop_rule(o.optional<std::string>("stop_rule", to_string(c.stop_rule)));
  c.seed = o.optional<std::uint64_t>("seed", c.seed);
  c.max_radius = o.optional<int>("max_radius", c.max_radius);
  o.finish();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

double Episode::total_reward() const {
  double s = 0.0;
  for (const auto& t : transitions) s += t.reward;
  return s;
}

bool violates(StopRule rule, double reward) {
  return rule == StopRule::kNonNegative ? !(reward >= 0.0) : !(reward > 0.0);
}

PaintEnv::PaintEnv(const EnvConfig& config, Canvas goal, const StartSpec& start)
    : config_(config), stroke_(config.stroke_model()), goal_(std::move(goal)) {
  config_.validate();
  if (goal_.empty()) throw InvalidArgument("goal canvas is empty");
  if (config_.patch.height > goal_.height() || config_.patch.width > goal_.width()) {
    throw InvalidArgument("patch does not fit the goal canvas");
  }
  canvas_ = make_start(goal_, start, config_.seed);
  Rng rng(mix_seed(config_.seed, kBrushStream));
  brush_ = {uniform_int(rng, 0, goal_.height() - 1), uniform_int(rng, 0, goal_.width() - 1)};
  initial_loss_ = l2_loss(canvas_, goal_);
  if (!(initial_loss_ > kDegenerateLoss)) {
    throw DegenerateEpisode("start canvas already matches the goal");
  }
  loss_ = initial_loss_;
  global_goal_ = downsample_area(goal_, config_.patch.height, config_.patch.width);
  obs_ = observe_with_global_ref(canvas_, goal_, global_goal_, brush_, config_.patch);
}

StepResult PaintEnv::step(const BrushAction& action) {
  if (done_) throw ContractViolation("step() called on a finished episode");
  brush_ = render_action_inplace(canvas_, brush_, action, stroke_);
  const double new_loss = l2_loss(canvas_, goal_);
  const double reward = improvement_reward(loss_, new_loss, initial_loss_);
  loss_ = new_loss;
  ++t_;
  done_ = (t_ > config_.grace_steps && violates(config_.stop_rule, reward)) ||
          t_ >= config_.max_steps;
  obs_ = observe_with_global_ref(canvas_, goal_, global_goal_, brush_, config_.patch);
  return {obs_, reward, done_};
}

std::pair<PaintEnv, Observation> reset(const EnvConfig& config, Canvas goal,
                                       const StartSpec& start) {
  PaintEnv env(config, std::move(goal), start);
  Observation obs = env.observation();
  return {std::move(env), std::move(obs)};
}

SampledAction RandomPolicy::act(const Observation&, Rng& rng) const {
  SampledAction s;
  ActionVector a{};
  for (auto& v : a) v = uniform01(rng);
  s.action = BrushAction::from_array(a);
  // Uniform density on the unit cube.
  s.log_prob = 0.0;
  return s;
}

SampledAction NetworkPolicy::act(const Observation& obs, Rng& rng) const {
  const auto dist = forward_policy(params_, assemble_input(obs));
  return stochastic_ ? sample_action(dist, rng) : mean_action(dist);
}

Episode rollout(const Policy& policy, PaintEnv& env) {
  Episode ep;
  ep.goal = env.goal();
  ep.seed = env.config().seed;
  ep.initial_loss = env.initial_loss();
  ep.states.push_back(env.canvas());
  ep.brushes.push_back(env.brush());
  Rng rng(mix_seed(env.config().seed, kPolicyStream));
  while (!env.done()) {
    Transition tr;
    tr.obs = env.observation();
    const SampledAction a = policy.act(tr.obs, rng);
    tr.action = a.action;
    tr.pre_squash = a.pre_squash;
    tr.log_prob = a.log_prob;
    StepResult r = env.step(a.action);
    tr.reward = r.reward;
    tr.done = r.done;
    tr.next_obs = std::move(r.obs);
    ep.transitions.push_back(std::move(tr));
    ep.states.push_back(env.canvas());
    ep.brushes.push_back(env.brush());
  }
  return ep;
}

void VecEnv::check(std::span<const BrushAction> actions) const {
  if (actions.size() != envs_.size()) {
    throw InvalidArgument("vec_step got " + std::to_string(actions.size()) + " actions for " +
                          std::to_string(envs_.size()) + " envs");
  }
  for (const auto& e : envs_) {
    if (e.done()) throw ContractViolation("vec_step on a finished env slot");
  }
}

std::vector<StepResult> VecEnv::step(std::span<const BrushAction> actions) {
  check(actions);
  std::vector<StepResult> out(envs_.size());
  kernels::parallel_for(envs_.size(), [&](std::size_t i) { out[i] = envs_[i].step(actions[i]); });
  return out;
}

std::vector<StepResult> VecEnv::step_serial(std::span<const BrushAction> actions) {
  check(actions);
  std::vector<StepResult> out(envs_.size());
  kernels::reference::serial_for(envs_.size(),
                                 [&](std::size_t i) { out[i] = envs_[i].step(actions[i]); });
  return out;
}

std::vector<Episode> vec_rollout(const Policy& policy, std::vector<PaintEnv>& envs) {
  std::vector<Episode> out(envs.size());
  kernels::parallel_for(envs.size(), [&](std::size_t i) { out[i] = rollout(policy, envs[i]); });
  return out;
}

EpisodeLog make_episode_log(const Episode& ep, const EnvConfig& config,
                            const StartSpec& start) {
  EpisodeLog log;
  log.config = config;
  log.config.seed = ep.seed;
  log.start_mode = start.mode;
  log.fill = start.fill;
  log.goal_hash = ep.goal.hash();
  log.start_hash = ep.states.front().hash();
  log.final_hash = ep.states.back().hash();
  for (const auto& t : ep.transitions) log.actions.push_back(t.action);
  return log;
}

void write_episode_log(const std::filesystem::path& path, const EpisodeLog& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  nlohmann::json header = {{"format", kEpisodeFormat},
                           {"version", kEpisodeVersion},
                           {"config", to_json(log.config)},
                           {"start", to_string(log.start_mode)},
                           {"fill", {log.fill.r, log.fill.g, log.fill.b}},
                           {"goal_hash", hex_digest(log.goal_hash)},
                           {"start_hash", hex_digest(log.start_hash)}};
  out << header.dump() << '\n';
  for (std::size_t t = 0; t < log.actions.size(); ++t) {
    out << nlohmann::json{{"t", t + 1}, {"action", action_json(log.actions[t])}}.dump() << '\n';
  }
  out << nlohmann::json{{"end", true},
                        {"steps", log.actions.size()},
                        {"final_hash", hex_digest(log.final_hash)}}
             .dump()
      << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

EpisodeLog read_episode_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  EpisodeLog log;
  std::string line;
  bool have_header = false;
  bool have_end = false;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (!have_header) {
        if (j.at("format") != kEpisodeFormat || j.at("version") != kEpisodeVersion) {
          throw IntegrityError("'" + path.string() + "' is not a version 1 episode log");
        }
        log.config = env_config_from_json(j.at("config"), "config");
        log.start_mode = parse_start_mode(j.at("start").get<std::string>());
        const auto f = j.at("fill");
        log.fill = {f.at(0).get<float>(), f.at(1).get<float>(), f.at(2).get<float>()};
        log.goal_hash = parse_hex_digest(j.at("goal_hash").get<std::string>());
        log.start_hash = parse_hex_digest(j.at("start_hash").get<std::string>());
        have_header = true;
      } else if (j.contains("end")) {
        if (j.at("steps").get<std::size_t>() != log.actions.size()) {
          throw IntegrityError("episode log step count does not match its actions");
        }
        log.final_hash = parse_hex_digest(j.at("final_hash").get<std::string>());
        have_end = true;
      } else {
        log.actions.push_back(action_from_json(j.at("action")));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("episode log '" + path.string() + "' malformed: " + e.what());
  }
  if (!have_header || !have_end) throw IntegrityError("episode log '" + path.string() + "' truncated");
  return log;
}

Episode replay_episode(const EpisodeLog& log, const Canvas& goal,
                       const std::optional<Canvas>& given_start) {
  if (goal.hash() != log.goal_hash) throw IntegrityError("goal hash does not match the episode log");
  StartSpec start{log.start_mode, log.fill, {}};
  if (log.start_mode == StartMode::kGiven) {
    if (!given_start) throw InvalidArgument("episode log needs the given start canvas");
    start.canvas = *given_start;
  }
  PaintEnv env(log.config, goal, start);
  if (env.canvas().hash() != log.start_hash) {
    throw IntegrityError("start canvas hash does not match the episode log");
  }

  class Scripted final : public Policy {
   public:
    explicit Scripted(const std::vector<BrushAction>& a) : actions_(a) {}
    SampledAction act(const Observation&, Rng&) const override {
      if (next_ >= actions_.size()) throw IntegrityError("episode log ends before the episode does");
      SampledAction s;
      s.action = actions_[next_++];
      return s;
    }
    std::size_t used() const { return next_; }

   private:
    const std::vector<BrushAction>& actions_;
    mutable std::size_t next_ = 0;
  } script(log.actions);

  Episode ep = rollout(script, env);
  if (script.used() != log.actions.size()) {
    throw IntegrityError("episode ended before all logged actions were replayed");
  }
  if (ep.states.back().hash() != log.final_hash) {
    throw IntegrityError("replayed final canvas hash does not match the episode log");
  }
  return ep;
}

}  // namespace hindpaint
