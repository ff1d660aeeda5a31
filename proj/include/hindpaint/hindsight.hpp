#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hindpaint/canvas.hpp"
#include "hindpaint/env.hpp"
#include "hindpaint/perception.hpp"

namespace hindpaint {

// One supervised example after goal substitution: the observation is rebuilt
// against the achieved final canvas, and reward/return are recomputed for it.
struct RelabeledSample {
  Observation obs_hat;
  BrushAction action;
  double reward_hat = 0.0;
  double return_hat = 0.0;
  bool operator==(const RelabeledSample&) const = default;
};

struct EpisodeProvenance {
  std::uint64_t seed = 0;
  std::uint64_t goal_hash = 0;
  std::int64_t goal_index = 0;
  std::int64_t length = 0;
  bool operator==(const EpisodeProvenance&) const = default;
};

struct SelfSupervisedDataset {
  std::vector<RelabeledSample> samples;
  std::vector<EpisodeProvenance> provenance;  // non-degenerate episodes, in order
  std::int64_t degenerate_skipped = 0;
  std::int64_t env_steps = 0;                 // including skipped episodes

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  void append(SelfSupervisedDataset&& other);
  bool operator==(const SelfSupervisedDataset&) const = default;
};

// q_t = sum_{k=t}^{T-1} gamma^{k-t} r_k, by backward recursion.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

// Substitutes the final canvas s_T for the goal:
//   o^_t = observe(s_t, s_T), r^_t = (L(s_t, s_T) - L(s_{t+1}, s_T)) / L(s_0, s_T)
// with 0-based transition index t, and returns q^ = discounted_returns(r^).
// Throws InvalidArgument for an empty episode and DegenerateEpisode when
// s_T equals s_0.
std::vector<RelabeledSample> relabel_episode(const Episode& ep, const PatchSpec& spec,
                                             double gamma);

// For each goal and episode: reset, roll out under the config's stop rule,
// relabel, append. Episodes run in parallel; assembly order is
// (goal index, episode index). Episode seeds are mix_seed(config.seed, goal,
// episode). Throws EmptyDataset when every episode is degenerate.
SelfSupervisedDataset build_dataset(const Policy& policy, std::span<const Canvas> goals,
                                    const EnvConfig& config, int episodes_per_goal,
                                    const StartSpec& start = StartSpec::blank());

// Episode e of a budgeted collection uses start e % m and goal (e / m) % n
// for m start modes and n goals.
struct EpisodeSlot {
  std::int64_t goal;
  std::int64_t start;
};
EpisodeSlot episode_slot(std::int64_t episode, std::size_t n_goals, std::size_t n_starts);

// Whole episodes collected until at least `env_steps` environment steps were
// spent. Episode e uses episode_slot(e, ...) and seed mix_seed(config.seed,
// goal, e). Starts that are already degenerate count as failed_starts.
struct CollectedEpisodes {
  std::vector<Episode> episodes;
  std::vector<EpisodeProvenance> provenance;
  std::int64_t env_steps = 0;
  std::int64_t failed_starts = 0;
  std::int64_t next_episode = 0;  // offset for the next collection
};
CollectedEpisodes collect_episodes(const Policy& policy, std::span<const Canvas> goals,
                                   const EnvConfig& config, std::int64_t env_steps,
                                   std::span<const StartSpec> starts,
                                   std::int64_t episode_offset = 0);

// Relabels every collected episode, skipping degenerate ones.
SelfSupervisedDataset relabel_collection(const CollectedEpisodes& collected,
                                         const EnvConfig& config);

// Same collection loop, but keeps cycling over goals (and start modes) until
// at least `env_steps` environment steps were spent. `episode_offset` shifts
// the episode counter so successive calls draw fresh seeds.
SelfSupervisedDataset build_dataset_for_budget(const Policy& policy,
                                               std::span<const Canvas> goals,
                                               const EnvConfig& config,
                                               std::int64_t env_steps,
                                               std::span<const StartSpec> starts,
                                               std::int64_t episode_offset = 0);

// Container of four-tile observation stacks, actions, rewards, returns and
// provenance. Round-trips bit-exactly.
void save_dataset(const std::filesystem::path& path, const SelfSupervisedDataset& data);
SelfSupervisedDataset load_dataset(const std::filesystem::path& path);

}  // namespace hindpaint
