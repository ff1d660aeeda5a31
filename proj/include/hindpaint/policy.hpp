#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "json.hpp"

#include "hindpaint/canvas.hpp"
#include "hindpaint/network.hpp"
#include "hindpaint/perception.hpp"
#include "hindpaint/rng.hpp"

namespace hindpaint {

inline constexpr double kMinLogStd = -5.0;
inline constexpr double kMaxLogStd = 2.0;

using ActionVector = std::array<double, kActionDim>;

// Policy and value networks share the trunk architecture but no parameters.
// The policy head emits pre-squash means; log_std is state independent.
struct NetParams {
  NetArch arch;
  ConvNet policy;
  ActionVector log_std{};
  ConvNet value;

  NetParams() = default;
  explicit NetParams(const NetArch& arch);

  bool operator==(const NetParams&) const = default;
};

struct InitOptions {
  std::uint64_t seed = 0;
  double policy_head_scale = 0.01;
  double value_head_scale = 1.0;
  double log_std = -0.5;
};

NetParams init_params(const NetArch& arch, const InitOptions& opts);

// Throws NumericError if any parameter is NaN or infinite.
void require_finite(const NetParams& params);

// Gaussian in pre-squash space, mapped to (0,1) by the logistic function.
struct ActionDistribution {
  ActionVector pre_mean{};
  ActionVector mean{};  // logistic(pre_mean)
  ActionVector std{};
};

struct SampledAction {
  BrushAction action;
  ActionVector pre_squash{};
  double log_prob = 0.0;
};

double logistic(double x);
ActionDistribution make_distribution(std::span<const double> pre_mean,
                                     const ActionVector& log_std);

// 2x2 tiling [ego_canvas | ego_ref ; global_canvas | global_ref].
// Throws InvalidArgument when the tiles differ in size.
Canvas assemble_input(const Observation& obs);

struct InputTiles {
  Canvas ego_canvas;
  Canvas ego_ref;
  Canvas global_canvas;
  Canvas global_ref;
};
// Inverse of assemble_input; requires even dimensions.
InputTiles split_input(const Canvas& input);

// Both throw NumericError if the output is not finite.
ActionDistribution forward_policy(const NetParams& params, const Canvas& input);
double forward_value(const NetParams& params, const Canvas& input);

// Log-density of a pre-squash sample, including the logistic change of
// variables: sum_d log N(u_d; mu_d, s_d) - log(a_d (1 - a_d)).
double log_prob(const ActionDistribution& dist, std::span<const double> pre_squash);
// Gaussian part only. Ratios of policies at the same sample only need this.
double gaussian_log_prob(const ActionDistribution& dist,
                         std::span<const double> pre_squash);

SampledAction sample_action(const ActionDistribution& dist, Rng& rng);
SampledAction sample_action(const ActionDistribution& dist, std::uint64_t seed);
SampledAction mean_action(const ActionDistribution& dist);

// Layer-named checkpoint archive with the architecture descriptor; load
// rejects descriptors that do not match the stored tensor shapes. `extra` is
// stored verbatim in the header (null: omitted).
void save_checkpoint(const std::filesystem::path& path, const NetParams& params,
                     const nlohmann::json& extra = nullptr);
NetParams load_checkpoint(const std::filesystem::path& path);
// The `extra` document of a checkpoint, or null.
nlohmann::json checkpoint_extra(const std::filesystem::path& path);

}  // namespace hindpaint
