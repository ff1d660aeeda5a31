#include "hindpaint/hindsight.hpp"

#include <optional>
#include <string>

#include "hindpaint/archive.hpp"
#include "hindpaint/error.hpp"
#include "hindpaint/kernels.hpp"

namespace hindpaint {

namespace {

constexpr const char* kDatasetKind = "hindpaint.dataset";
constexpr int kDatasetVersion = 1;

struct EpisodeOutcome {
  std::optional<std::vector<RelabeledSample>> samples;  // empty when degenerate
  EpisodeProvenance provenance;
};

EnvConfig episode_config(const EnvConfig& config, std::int64_t goal_index,
                         std::int64_t episode_index) {
  EnvConfig cfg = config;
  cfg.seed = mix_seed(config.seed, static_cast<std::uint64_t>(goal_index),
                      static_cast<std::uint64_t>(episode_index));
  return cfg;
}

EpisodeOutcome relabel_outcome(const Episode& ep, const EpisodeProvenance& prov,
                               const EnvConfig& config) {
  EpisodeOutcome out;
  out.provenance = prov;
  try {
    out.samples = relabel_episode(ep, config.patch, config.gamma);
  } catch (const DegenerateEpisode&) {
    out.samples.reset();
  }
  return out;
}

EpisodeOutcome run_episode(const Policy& policy, const Canvas& goal, std::int64_t goal_index,
                           std::int64_t episode_index, const EnvConfig& config,
                           const StartSpec& start) {
  const EnvConfig cfg = episode_config(config, goal_index, episode_index);
  EpisodeProvenance prov{cfg.seed, goal.hash(), goal_index, 0};
  try {
    PaintEnv env(cfg, goal, start);
    const Episode ep = rollout(policy, env);
    prov.length = static_cast<std::int64_t>(ep.length());
    return relabel_outcome(ep, prov, cfg);
  } catch (const DegenerateEpisode&) {
    return {std::nullopt, prov};
  }
}

void absorb(SelfSupervisedDataset& data, EpisodeOutcome&& outcome) {
  data.env_steps += outcome.provenance.length;
  if (!outcome.samples) {
    ++data.degenerate_skipped;
    return;
  }
  for (auto& s : *outcome.samples) data.samples.push_back(std::move(s));
  data.provenance.push_back(outcome.provenance);
}

// Storage order of the four tiles in the dataset container.
template <typename Obs>
auto& tile(Obs& o, int k) {
  switch (k) {
    case 0: return o.ego_canvas;
    case 1: return o.global_canvas;
    case 2: return o.ego_ref;
    default: return o.global_ref;
  }
}

}  // namespace

void SelfSupervisedDataset::append(SelfSupervisedDataset&& other) {
  for (auto& s : other.samples) samples.push_back(std::move(s));
  for (auto& p : other.provenance) provenance.push_back(p);
  degenerate_skipped += other.degenerate_skipped;
  env_steps += other.env_steps;
}

EpisodeSlot episode_slot(std::int64_t episode, std::size_t n_goals, std::size_t n_starts) {
  const auto m = static_cast<std::int64_t>(n_starts);
  return {(episode / m) % static_cast<std::int64_t>(n_goals), episode % m};
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> q(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    q[i] = acc;
  }
  return q;
}

std::vector<RelabeledSample> relabel_episode(const Episode& ep, const PatchSpec& spec,
                                             double gamma) {
  if (ep.transitions.empty()) throw InvalidArgument("cannot relabel an episode without transitions");
  if (ep.states.size() != ep.transitions.size() + 1 || ep.brushes.size() != ep.states.size()) {
    throw InvalidArgument("episode states, brushes and transitions are inconsistent");
  }
  const Canvas& achieved = ep.states.back();
  const double initial = l2_loss(ep.states.front(), achieved);
  if (!(initial > kDegenerateLoss)) {
    throw DegenerateEpisode("episode final canvas equals its start canvas");
  }

  const std::size_t n = ep.transitions.size();
  std::vector<double> losses(n + 1);
  for (std::size_t t = 0; t <= n; ++t) losses[t] = l2_loss(ep.states[t], achieved);

  const Canvas global_ref = downsample_area(achieved, spec.height, spec.width);
  std::vector<RelabeledSample> out(n);
  std::vector<double> rewards(n);
  for (std::size_t t = 0; t < n; ++t) {
    out[t].obs_hat = observe_with_global_ref(ep.states[t], achieved, global_ref, ep.brushes[t], spec);
    out[t].action = ep.transitions[t].action;
    rewards[t] = improvement_reward(losses[t], losses[t + 1], initial);
    out[t].reward_hat = rewards[t];
  }
  const auto q = discounted_returns(rewards, gamma);
  for (std::size_t t = 0; t < n; ++t) out[t].return_hat = q[t];
  return out;
}

SelfSupervisedDataset build_dataset(const Policy& policy, std::span<const Canvas> goals,
                                    const EnvConfig& config, int episodes_per_goal,
                                    const StartSpec& start) {
  if (goals.empty()) throw InvalidArgument("build_dataset needs at least one goal");
  if (episodes_per_goal < 1) throw InvalidArgument("episodes_per_goal must be >= 1");
  const std::size_t total = goals.size() * static_cast<std::size_t>(episodes_per_goal);
  std::vector<EpisodeOutcome> outcomes(total);
  kernels::parallel_for(total, [&](std::size_t k) {
    const std::size_t g = k / episodes_per_goal;
    const std::size_t e = k % episodes_per_goal;
    outcomes[k] = run_episode(policy, goals[g], static_cast<std::int64_t>(g),
                              static_cast<std::int64_t>(e), config, start);
  });
  SelfSupervisedDataset data;
  for (auto& o : outcomes) absorb(data, std::move(o));
  if (data.samples.empty()) throw EmptyDataset("every collected episode was degenerate");
  return data;
}

CollectedEpisodes collect_episodes(const Policy& policy, std::span<const Canvas> goals,
                                   const EnvConfig& config, std::int64_t env_steps,
                                   std::span<const StartSpec> starts,
                                   std::int64_t episode_offset) {
  if (goals.empty()) throw InvalidArgument("episode collection needs at least one goal");
  if (starts.empty()) throw InvalidArgument("episode collection needs at least one start mode");
  CollectedEpisodes out;
  out.next_episode = episode_offset;
  constexpr std::size_t kWave = 16;
  while (out.env_steps < env_steps) {
    std::vector<std::optional<Episode>> wave(kWave);
    std::vector<EpisodeProvenance> prov(kWave);
    const std::int64_t first = out.next_episode;
    kernels::parallel_for(kWave, [&](std::size_t k) {
      const std::int64_t e = first + static_cast<std::int64_t>(k);
      const EpisodeSlot slot = episode_slot(e, goals.size(), starts.size());
      const Canvas& goal = goals[slot.goal];
      const EnvConfig cfg = episode_config(config, slot.goal, e);
      prov[k] = {cfg.seed, goal.hash(), slot.goal, 0};
      try {
        PaintEnv env(cfg, goal, starts[slot.start]);
        wave[k] = rollout(policy, env);
        prov[k].length = static_cast<std::int64_t>(wave[k]->length());
      } catch (const DegenerateEpisode&) {
        wave[k].reset();
      }
    });
    // Only the prefix needed to reach the budget is kept, so the result does
    // not depend on the wave size.
    const std::int64_t before = out.env_steps;
    for (std::size_t k = 0; k < kWave && out.env_steps < env_steps; ++k) {
      ++out.next_episode;
      if (!wave[k]) {
        ++out.failed_starts;
        continue;
      }
      out.env_steps += prov[k].length;
      out.episodes.push_back(std::move(*wave[k]));
      out.provenance.push_back(prov[k]);
    }
    if (out.env_steps == before) {
      throw EmptyDataset("no episode could be started on the given goals");
    }
  }
  return out;
}

SelfSupervisedDataset relabel_collection(const CollectedEpisodes& collected,
                                         const EnvConfig& config) {
  const std::size_t n = collected.episodes.size();
  std::vector<EpisodeOutcome> outcomes(n);
  kernels::parallel_for(n, [&](std::size_t k) {
    outcomes[k] = relabel_outcome(collected.episodes[k], collected.provenance[k], config);
  });
  SelfSupervisedDataset data;
  data.degenerate_skipped = collected.failed_starts;
  for (auto& o : outcomes) absorb(data, std::move(o));
  return data;
}

SelfSupervisedDataset build_dataset_for_budget(const Policy& policy,
                                               std::span<const Canvas> goals,
                                               const EnvConfig& config,
                                               std::int64_t env_steps,
                                               std::span<const StartSpec> starts,
                                               std::int64_t episode_offset) {
  SelfSupervisedDataset data = relabel_collection(
      collect_episodes(policy, goals, config, env_steps, starts, episode_offset), config);
  if (data.samples.empty() && env_steps > 0) {
    throw EmptyDataset("every collected episode was degenerate");
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const SelfSupervisedDataset& data) {
  Archive ar;
  ar.kind = kDatasetKind;
  ar.version = kDatasetVersion;
  const std::int64_t n = static_cast<std::int64_t>(data.samples.size());
  int th = 0;
  int tw = 0;
  if (n > 0) {
    th = data.samples.front().obs_hat.ego_canvas.height();
    tw = data.samples.front().obs_hat.ego_canvas.width();
  }
  ar.meta = {{"samples", n},
             {"tile", {th, tw}},
             {"degenerate_skipped", data.degenerate_skipped},
             {"env_steps", data.env_steps}};

  std::vector<float> tiles;
  tiles.reserve(static_cast<std::size_t>(n) * 4 * th * tw * 3);
  std::vector<std::int64_t> brushes;
  std::vector<double> actions;
  std::vector<double> rewards;
  std::vector<double> returns;
  for (const auto& s : data.samples) {
    for (int k = 0; k < 4; ++k) {
      const Canvas& c = tile(s.obs_hat, k);
      if (c.height() != th || c.width() != tw) {
        throw InvalidArgument("dataset samples have inconsistent tile sizes");
      }
      tiles.insert(tiles.end(), c.data().begin(), c.data().end());
    }
    brushes.push_back(s.obs_hat.brush.row);
    brushes.push_back(s.obs_hat.brush.col);
    const auto a = s.action.as_array();
    actions.insert(actions.end(), a.begin(), a.end());
    rewards.push_back(s.reward_hat);
    returns.push_back(s.return_hat);
  }
  std::vector<std::int64_t> prov;
  for (const auto& p : data.provenance) {
    prov.push_back(static_cast<std::int64_t>(p.seed));
    prov.push_back(static_cast<std::int64_t>(p.goal_hash));
    prov.push_back(p.goal_index);
    prov.push_back(p.length);
  }
  ar.tensors.push_back(Tensor::from_f32("obs_tiles", {n, 4, th, tw, 3}, tiles));
  ar.tensors.push_back(Tensor::from_i64("brush", {n, 2}, brushes));
  ar.tensors.push_back(Tensor::from_f64("action", {n, kActionDim}, actions));
  ar.tensors.push_back(Tensor::from_f64("reward_hat", {n}, rewards));
  ar.tensors.push_back(Tensor::from_f64("return_hat", {n}, returns));
  ar.tensors.push_back(Tensor::from_i64(
      "provenance", {static_cast<std::int64_t>(data.provenance.size()), 4}, prov));
  write_archive(path, ar);
}

SelfSupervisedDataset load_dataset(const std::filesystem::path& path) {
  const Archive ar = read_archive(path, kDatasetKind);
  if (ar.version != kDatasetVersion) {
    throw IntegrityError("unsupported dataset version " + std::to_string(ar.version));
  }
  SelfSupervisedDataset data;
  std::int64_t n = 0;
  int th = 0;
  int tw = 0;
  try {
    n = ar.meta.at("samples").get<std::int64_t>();
    th = ar.meta.at("tile").at(0).get<int>();
    tw = ar.meta.at("tile").at(1).get<int>();
    data.degenerate_skipped = ar.meta.at("degenerate_skipped").get<std::int64_t>();
    data.env_steps = ar.meta.at("env_steps").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("dataset metadata malformed: ") + e.what());
  }
  const auto tiles = ar.get("obs_tiles").to_f32();
  const auto brushes = ar.get("brush").to_i64();
  const auto actions = ar.get("action").to_f64();
  const auto rewards = ar.get("reward_hat").to_f64();
  const auto returns = ar.get("return_hat").to_f64();
  const auto prov = ar.get("provenance").to_i64();
  const std::size_t tile_len = static_cast<std::size_t>(th) * tw * 3;
  if (tiles.size() != static_cast<std::size_t>(n) * 4 * tile_len ||
      brushes.size() != static_cast<std::size_t>(n) * 2 ||
      actions.size() != static_cast<std::size_t>(n) * kActionDim ||
      rewards.size() != static_cast<std::size_t>(n) || returns.size() != rewards.size() ||
      prov.size() % 4 != 0) {
    throw IntegrityError("dataset tensors disagree with the sample count");
  }
  data.samples.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    auto& s = data.samples[i];
    for (int k = 0; k < 4; ++k) {
      Canvas c(th, tw);
      const auto begin = tiles.begin() + (static_cast<std::size_t>(i) * 4 + k) * tile_len;
      std::copy(begin, begin + tile_len, c.data().begin());
      tile(s.obs_hat, k) = std::move(c);
    }
    s.obs_hat.brush = {static_cast<int>(brushes[2 * i]), static_cast<int>(brushes[2 * i + 1])};
    ActionVector a{};
    for (int d = 0; d < kActionDim; ++d) a[d] = actions[i * kActionDim + d];
    s.action = BrushAction::from_array(a);
    s.reward_hat = rewards[i];
    s.return_hat = returns[i];
  }
  for (std::size_t k = 0; k < prov.size(); k += 4) {
    data.provenance.push_back({static_cast<std::uint64_t>(prov[k]),
                               static_cast<std::uint64_t>(prov[k + 1]), prov[k + 2], prov[k + 3]});
  }
  return data;
}

}  // namespace hindpaint
