#pragma once
// One-step painting bandit: a fixed observation, reward -||a - a*||^2.

#include <algorithm>
#include <cmath>

#include "hindpaint/learn.hpp"

namespace hindpaint::testing {

inline constexpr ActionVector kBanditTarget{0.3, 0.7, 0.5, 0.6, 0.4, 0.65};

struct BanditRun {
  int first_within = -1;      // first iteration whose mean action is within tol
  double final_error = 0.0;   // max |mean - target| after the last iteration
  ActionVector final_mean{};
};

inline double bandit_error(const NetParams& p, const Canvas& input) {
  const auto d = forward_policy(p, input);
  double e = 0.0;
  for (int k = 0; k < kActionDim; ++k) e = std::max(e, std::abs(d.mean[k] - kBanditTarget[k]));
  return e;
}

inline BanditRun run_bandit(int iterations, double tol, std::uint64_t seed) {
  const NetArch arch = NetArch::compact(16, 8, 32);
  NetParams params = init_params(arch, {seed, 0.01, 1.0, -0.5});
  PPOConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.minibatch_size = 64;
  cfg.rollout_batch = 64;
  cfg.entropy_coeff = 0.0;
  cfg.seed = seed;
  PPOTrainer trainer(params, cfg);
  const Canvas input = random_canvas(16, 16, mix_seed(seed, 1));
  Rng rng(mix_seed(seed, 2));

  BanditRun run;
  for (int it = 0; it < iterations; ++it) {
    const auto dist = forward_policy(params, input);
    std::vector<PPOSample> batch(static_cast<std::size_t>(cfg.rollout_batch));
    for (auto& s : batch) {
      const SampledAction a = sample_action(dist, rng);
      const auto v = a.action.as_array();
      double r = 0.0;
      for (int k = 0; k < kActionDim; ++k) r -= (v[k] - kBanditTarget[k]) * (v[k] - kBanditTarget[k]);
      s = {input, a.pre_squash, a.log_prob, r};
    }
    trainer.update(params, batch);
    if (run.first_within < 0 && bandit_error(params, input) <= tol) run.first_within = it + 1;
  }
  run.final_error = bandit_error(params, input);
  run.final_mean = forward_policy(params, input).mean;
  return run;
}

}  // namespace hindpaint::testing
