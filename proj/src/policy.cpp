#include "hindpaint/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hindpaint/archive.hpp"
#include "hindpaint/error.hpp"

namespace hindpaint {

namespace {

constexpr const char* kCheckpointKind = "hindpaint.checkpoint";
constexpr int kCheckpointVersion = 1;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(a (1 - a)) for a = logistic(u), stable for large |u|.
double log_logistic_jacobian(double u) { return -softplus(u) - softplus(-u); }

void copy_tile(const Canvas& tile, Canvas& dst, int top, int left) {
  for (int y = 0; y < tile.height(); ++y) {
    for (int x = 0; x < tile.width(); ++x) dst.set_pixel(top + y, left + x, tile.pixel(y, x));
  }
}

Canvas crop(const Canvas& src, int top, int left, int h, int w) {
  Canvas out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.set_pixel(y, x, src.pixel(top + y, left + x));
  }
  return out;
}

void check_finite_output(std::span<const double> out, const char* what) {
  for (double v : out) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + " produced a non-finite output");
  }
}

nlohmann::json arch_to_json(const NetArch& a) {
  nlohmann::json convs = nlohmann::json::array();
  for (const auto& c : a.convs) convs.push_back({c.filters, c.kernel, c.stride});
  return {{"input_h", a.input_h}, {"input_w", a.input_w}, {"channels", a.channels},
          {"convs", convs},       {"hidden", a.hidden},   {"action_dim", kActionDim}};
}

NetArch arch_from_json(const nlohmann::json& j) {
  NetArch a;
  a.input_h = j.at("input_h").get<int>();
  a.input_w = j.at("input_w").get<int>();
  a.channels = j.at("channels").get<int>();
  a.hidden = j.at("hidden").get<int>();
  a.convs.clear();
  for (const auto& c : j.at("convs")) {
    a.convs.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()});
  }
  if (j.at("action_dim").get<int>() != kActionDim) {
    throw IntegrityError("checkpoint action dimension does not match");
  }
  return a;
}

void add_net_tensors(Archive& ar, const std::string& prefix, const ConvNet& net) {
  const auto p = net.params();
  for (const auto& L : net.layers()) {
    ar.tensors.push_back(Tensor::from_f64(prefix + "." + L.name + ".weight", L.weight_shape,
                                          p.subspan(L.weight_offset, L.weight_size)));
    ar.tensors.push_back(Tensor::from_f64(prefix + "." + L.name + ".bias",
                                          {static_cast<std::int64_t>(L.bias_size)},
                                          p.subspan(L.bias_offset, L.bias_size)));
  }
}

void load_net_tensors(const Archive& ar, const std::string& prefix, ConvNet& net) {
  auto p = net.params();
  for (const auto& L : net.layers()) {
    const auto& w = ar.get(prefix + "." + L.name + ".weight");
    const auto& b = ar.get(prefix + "." + L.name + ".bias");
    if (w.shape != L.weight_shape || b.numel() != static_cast<std::int64_t>(L.bias_size)) {
      throw IntegrityError("tensor shape of " + prefix + "." + L.name +
                           " does not match the architecture descriptor");
    }
    const auto wv = w.to_f64();
    const auto bv = b.to_f64();
    std::copy(wv.begin(), wv.end(), p.begin() + L.weight_offset);
    std::copy(bv.begin(), bv.end(), p.begin() + L.bias_offset);
  }
}

}  // namespace

NetParams::NetParams(const NetArch& a)
    : arch(a), policy(a, kActionDim), value(a, 1) {}

NetParams init_params(const NetArch& arch, const InitOptions& opts) {
  NetParams p(arch);
  p.policy.init(mix_seed(opts.seed, 101), opts.policy_head_scale);
  p.value.init(mix_seed(opts.seed, 202), opts.value_head_scale);
  p.log_std.fill(std::clamp(opts.log_std, kMinLogStd, kMaxLogStd));
  return p;
}

void require_finite(const NetParams& params) {
  auto check = [](std::span<const double> v, const char* what) {
    for (double x : v) {
      if (!std::isfinite(x)) throw NumericError(std::string(what) + " parameters are not finite");
    }
  };
  check(params.policy.params(), "policy");
  check(params.value.params(), "value");
  check(params.log_std, "log-std");
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ActionDistribution make_distribution(std::span<const double> pre_mean,
                                     const ActionVector& log_std) {
  if (pre_mean.size() != kActionDim) throw InvalidArgument("policy head must have 6 outputs");
  ActionDistribution d;
  for (int i = 0; i < kActionDim; ++i) {
    d.pre_mean[i] = pre_mean[i];
    d.mean[i] = logistic(pre_mean[i]);
    d.std[i] = std::exp(std::clamp(log_std[i], kMinLogStd, kMaxLogStd));
  }
  return d;
}

Canvas assemble_input(const Observation& obs) {
  const Canvas& t = obs.ego_canvas;
  for (const Canvas* c : {&obs.global_canvas, &obs.ego_ref, &obs.global_ref}) {
    if (!c->same_shape(t)) throw InvalidArgument("observation tiles differ in size");
  }
  const int h = t.height();
  const int w = t.width();
  Canvas input(2 * h, 2 * w);
  copy_tile(obs.ego_canvas, input, 0, 0);
  copy_tile(obs.ego_ref, input, 0, w);
  copy_tile(obs.global_canvas, input, h, 0);
  copy_tile(obs.global_ref, input, h, w);
  return input;
}

InputTiles split_input(const Canvas& input) {
  if (input.height() % 2 != 0 || input.width() % 2 != 0) {
    throw InvalidArgument("network input must have even dimensions");
  }
  const int h = input.height() / 2;
  const int w = input.width() / 2;
  return {crop(input, 0, 0, h, w), crop(input, 0, w, h, w), crop(input, h, 0, h, w),
          crop(input, h, w, h, w)};
}

ActionDistribution forward_policy(const NetParams& params, const Canvas& input) {
  const auto out = params.policy.forward(input.data());
  check_finite_output(out, "policy network");
  return make_distribution(out, params.log_std);
}

double forward_value(const NetParams& params, const Canvas& input) {
  const auto out = params.value.forward(input.data());
  check_finite_output(out, "value network");
  return out[0];
}

double gaussian_log_prob(const ActionDistribution& dist,
                         std::span<const double> pre_squash) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double lp = 0.0;
  for (int i = 0; i < kActionDim; ++i) {
    const double z = (pre_squash[i] - dist.pre_mean[i]) / dist.std[i];
    lp += -0.5 * z * z - std::log(dist.std[i]) - kHalfLog2Pi;
  }
  return lp;
}

double log_prob(const ActionDistribution& dist, std::span<const double> pre_squash) {
  double lp = gaussian_log_prob(dist, pre_squash);
  for (int i = 0; i < kActionDim; ++i) lp -= log_logistic_jacobian(pre_squash[i]);
  return lp;
}

SampledAction sample_action(const ActionDistribution& dist, Rng& rng) {
  SampledAction s;
  ActionVector a{};
  for (int i = 0; i < kActionDim; ++i) {
    s.pre_squash[i] = dist.pre_mean[i] + dist.std[i] * standard_normal(rng);
    a[i] = std::clamp(logistic(s.pre_squash[i]), 0.0, 1.0);
  }
  s.action = BrushAction::from_array(a);
  s.log_prob = log_prob(dist, s.pre_squash);
  return s;
}

SampledAction sample_action(const ActionDistribution& dist, std::uint64_t seed) {
  Rng rng(seed);
  return sample_action(dist, rng);
}

SampledAction mean_action(const ActionDistribution& dist) {
  SampledAction s;
  s.pre_squash = dist.pre_mean;
  s.action = BrushAction::from_array(dist.mean);
  s.log_prob = log_prob(dist, s.pre_squash);
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const NetParams& params,
                     const nlohmann::json& extra) {
  Archive ar;
  ar.kind = kCheckpointKind;
  ar.version = kCheckpointVersion;
  ar.meta["arch"] = arch_to_json(params.arch);
  if (!extra.is_null()) ar.meta["extra"] = extra;
  add_net_tensors(ar, "policy", params.policy);
  ar.tensors.push_back(Tensor::from_f64("policy.log_std", {kActionDim}, params.log_std));
  add_net_tensors(ar, "value", params.value);
  write_archive(path, ar);
}

nlohmann::json checkpoint_extra(const std::filesystem::path& path) {
  const Archive ar = read_archive(path, kCheckpointKind);
  return ar.meta.contains("extra") ? ar.meta.at("extra") : nlohmann::json();
}

NetParams load_checkpoint(const std::filesystem::path& path) {
  const Archive ar = read_archive(path, kCheckpointKind);
  if (ar.version != kCheckpointVersion) {
    throw IntegrityError("unsupported checkpoint version " + std::to_string(ar.version));
  }
  NetArch arch;
  try {
    arch = arch_from_json(ar.meta.at("arch"));
    arch.validate();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint architecture descriptor malformed: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw IntegrityError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  NetParams p(arch);
  load_net_tensors(ar, "policy", p.policy);
  load_net_tensors(ar, "value", p.value);
  const auto ls = ar.get("policy.log_std").to_f64();
  if (ls.size() != kActionDim) throw IntegrityError("log_std tensor has wrong size");
  std::copy(ls.begin(), ls.end(), p.log_std.begin());
  return p;
}

}  // namespace hindpaint
