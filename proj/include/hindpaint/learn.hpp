#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hindpaint/env.hpp"
#include "hindpaint/hindsight.hpp"
#include "hindpaint/optimizer.hpp"
#include "hindpaint/policy.hpp"

namespace hindpaint {

// Supervised regression settings shared by behavior cloning and value fitting.
struct BCConfig {
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 1e-3;
  // Behavior cloning keeps only samples with relabeled reward > 0.
  bool reward_filter = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PPOConfig {
  double clip_epsilon = 0.2;
  int epochs_per_batch = 4;
  int minibatch_size = 64;
  double learning_rate = 3e-4;
  int rollout_batch = 1024;      // env steps collected per iteration
  int iterations = 1000;         // cap on PPO iterations; 0 disables all training
  double entropy_coeff = 1e-3;
  double value_coeff = 0.5;
  double max_grad_norm = 0.5;    // <= 0 disables clipping
  std::uint64_t seed = 0;

  void validate() const;
};

struct RegressionResult {
  NetParams params;
  std::vector<double> epoch_losses;  // mean minibatch loss of each epoch
  double initial_loss = 0.0;         // full-data loss before training
  double final_loss = 0.0;           // full-data loss after training
  std::size_t samples_used = 0;
};

// Network inputs (2x2 tiled observations) precomputed for a dataset.
std::vector<Canvas> assemble_inputs(const SelfSupervisedDataset& data);

// Mean over samples of ||mean(o) - a||^2.
double bc_objective(const NetParams& params, std::span<const Canvas> inputs,
                    std::span<const BrushAction> actions);
// Mean over samples of (V(o) - q)^2.
double value_objective(const NetParams& params, std::span<const Canvas> inputs,
                       std::span<const double> targets);

// Gradient of bc_objective w.r.t. the policy network parameters.
std::vector<double> bc_gradient(const NetParams& params, std::span<const Canvas> inputs,
                                std::span<const BrushAction> actions);

// Throws InvalidArgument when the (filtered) dataset is empty.
RegressionResult behavior_clone(const NetParams& params, const SelfSupervisedDataset& data,
                                const BCConfig& cfg);
// Regresses V onto the relabeled returns of every sample (no reward filter).
RegressionResult fit_value(const NetParams& params, const SelfSupervisedDataset& data,
                           const BCConfig& cfg);

// One on-policy sample for the clipped-surrogate update.
struct PPOSample {
  Canvas input;
  ActionVector pre_squash{};
  double log_prob_old = 0.0;
  double ret = 0.0;
};

// Builds samples from episodes collected with the current policy, with
// discounted returns of the true rewards.
std::vector<PPOSample> ppo_samples(std::span<const Episode> episodes, double gamma);

struct SurrogateResult {
  double loss = 0.0;                // -mean(min(rA, clip(r)A)) - c_ent * H
  std::vector<double> grad_policy;  // w.r.t. policy network parameters
  ActionVector grad_log_std{};
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// Policy loss and gradient for explicit advantages.
SurrogateResult policy_surrogate(const NetParams& params, std::span<const PPOSample> batch,
                                 std::span<const double> advantages, double clip_epsilon,
                                 double entropy_coeff);

// pi_new(u|o) / pi_old(u|o) for every sample.
std::vector<double> importance_ratios(const NetParams& params, std::span<const PPOSample> batch);

// A = q - V(o), centered on the batch mean and scaled to unit variance when
// the batch variance is non-zero. Throws NumericError on non-finite advantages.
std::vector<double> compute_advantages(const NetParams& params, std::span<const PPOSample> batch);

struct PPOStats {
  double surrogate_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Holds optimizer state across PPO iterations.
class PPOTrainer {
 public:
  PPOTrainer(const NetParams& params, const PPOConfig& cfg);

  PPOStats update(NetParams& params, std::span<const PPOSample> batch);
  std::uint64_t updates() const { return updates_; }

 private:
  PPOConfig cfg_;
  Adam policy_opt_;
  Adam log_std_opt_;
  Adam value_opt_;
  std::uint64_t updates_ = 0;
};

// Single update with fresh optimizer state.
std::pair<NetParams, PPOStats> ppo_update(const NetParams& params, std::span<const PPOSample> batch,
                                          const PPOConfig& cfg);

enum class Scheme { kRlOnly, kSslOnly, kCombined };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct PipelineConfig {
  std::int64_t env_steps = 60000;  // budget shared by every scheme
  double ssl_fraction = 0.5;       // combined: share spent on the random-policy bootstrap
  int bc_every = 1;                // combined: PPO iterations per relabel/BC phase
  int refresh_epochs = 2;          // combined: BC/value epochs per relabel phase
  // combined: when > 0, relabeled samples are pooled with the bootstrap data
  // and each refresh trains on a random subset of this size. 0 refreshes on
  // the latest rollouts only.
  int refresh_samples = 0;
  bool refresh_value = true;       // combined: refit V at every refresh
  // Stop rule of the random-policy rollouts that seed the hindsight data.
  // PPO rollouts use the env's own rule.
  StopRule collect_stop_rule = StopRule::kStrictlyPositive;
  std::uint64_t seed = 0;
  NetArch arch = NetArch::full_scale();  // input must be twice the patch size
  InitOptions init;
  std::vector<StartMode> start_modes{StartMode::kBlank, StartMode::kRandom};

  void validate() const;
};

struct TrainStats {
  int iteration = 0;
  std::string scheme;
  std::string phase;              // "ssl", "ppo", "refresh"
  std::int64_t env_steps = 0;     // cumulative
  double mean_episode_reward = 0.0;
  double mean_episode_length = 0.0;
  double bc_loss = 0.0;
  double value_fit_loss = 0.0;
  double surrogate_loss = 0.0;
  double value_loss = 0.0;
};

nlohmann::json to_json(const TrainStats& s);
void write_train_stats(std::ostream& out, std::span<const TrainStats> history);

struct TrainResult {
  NetParams params;
  std::vector<TrainStats> history;
  std::int64_t env_steps = 0;
  std::uint64_t ppo_updates = 0;
};

// rl_only:  PPO from the initialization.
// ssl_only: random-policy rollouts relabeled, then behavior cloning and value
//           fitting.
// combined: the ssl_only bootstrap, then PPO iterations whose rollouts are
//           also relabeled for periodic behavior-cloning/value refreshes.
// All schemes stop once `env_steps` environment steps were collected (whole
// episodes, so the last one may run past the budget). ppo.iterations == 0
// returns the initialization for every scheme.
TrainResult train_pipeline(std::span<const Canvas> goals, const EnvConfig& env_cfg,
                           const BCConfig& bc_cfg, const PPOConfig& ppo_cfg,
                           const PipelineConfig& pipe_cfg, Scheme scheme);

}  // namespace hindpaint
