#include "hindpaint/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>

#include "hindpaint/error.hpp"
#include "hindpaint/kernels.hpp"

namespace hindpaint {

namespace {

constexpr std::uint64_t kEnvStream = 7;
constexpr std::uint64_t kBcStream = 11;
constexpr std::uint64_t kPpoStream = 13;
constexpr std::uint64_t kPoolStream = 17;

// Up to n samples drawn without replacement, kept in pool order.
SelfSupervisedDataset subsample(const SelfSupervisedDataset& pool, std::size_t n, Rng& rng) {
  SelfSupervisedDataset out;
  std::vector<std::size_t> idx(pool.samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n < idx.size()) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(
                                    std::uniform_int_distribution<std::size_t>(0, idx.size() - 1 - i)(rng));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
  }
  for (std::size_t i : idx) out.samples.push_back(pool.samples[i]);
  return out;
}

// Per-chunk scratch for forward/backward passes.
struct Workspace {
  ConvNet::Cache cache;
  std::vector<double> d_out;
};

auto make_workspace(int out_dim) {
  return [out_dim] {
    Workspace ws;
    ws.d_out.assign(out_dim, 0.0);
    return ws;
  };
}

std::vector<std::size_t> identity_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

double dot(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

void clip_by_norm(std::span<double> a, std::span<double> b, double max_norm) {
  if (max_norm <= 0.0) return;
  const double norm = std::sqrt(dot(a) + dot(b));
  if (!std::isfinite(norm)) throw NumericError("gradient norm is not finite");
  if (norm <= max_norm) return;
  const double k = max_norm / norm;
  for (double& v : a) v *= k;
  for (double& v : b) v *= k;
}

// Squared action error of the policy mean; writes d(loss)/d(pre_mean).
double bc_sample_loss(std::span<const double> pre_mean, const BrushAction& target,
                      std::span<double> d_out) {
  const auto a = target.as_array();
  double loss = 0.0;
  for (int d = 0; d < kActionDim; ++d) {
    const double m = logistic(pre_mean[d]);
    const double e = m - a[d];
    loss += e * e;
    d_out[d] = 2.0 * e * m * (1.0 - m);
  }
  return loss;
}

double value_sample_loss(std::span<const double> out, double target, std::span<double> d_out) {
  const double e = out[0] - target;
  d_out[0] = 2.0 * e;
  return e * e;
}

// input(i) -> const Canvas&; fn(i, out, d_out) -> per-sample loss. Returns
// the mean loss over idx and writes the mean gradient into grad.
template <typename InputFn, typename LossFn>
double mean_loss_and_grad(const ConvNet& net, InputFn&& input,
                          std::span<const std::size_t> idx, LossFn&& fn,
                          std::vector<double>& grad) {
  const std::size_t np = net.num_params();
  std::vector<double> acc(np + 1);
  kernels::parallel_accumulate(
      idx.size(), acc, make_workspace(net.out_dim()),
      [&](std::size_t k, std::span<double> g, Workspace& ws) {
        const std::size_t i = idx[k];
        const auto out = net.forward(input(i).data(), ws.cache);
        g[np] += fn(i, out, std::span<double>(ws.d_out));
        net.backward(ws.cache, ws.d_out, g.first(np));
      });
  const double inv = 1.0 / static_cast<double>(idx.size());
  grad.assign(acc.begin(), acc.begin() + np);
  for (double& v : grad) v *= inv;
  return acc[np] * inv;
}

template <typename InputFn, typename LossFn>
double mean_loss(const ConvNet& net, InputFn&& input, std::span<const std::size_t> idx,
                 LossFn&& fn) {
  double acc = 0.0;
  kernels::parallel_accumulate(
      idx.size(), std::span<double>(&acc, 1), make_workspace(net.out_dim()),
      [&](std::size_t k, std::span<double> g, Workspace& ws) {
        const std::size_t i = idx[k];
        const auto out = net.forward(input(i).data(), ws.cache);
        const double l = fn(i, out, std::span<double>(ws.d_out));
        if (!std::isfinite(l)) throw NumericError("regression loss is not finite");
        g[0] += l;
      });
  return acc / static_cast<double>(idx.size());
}

// Minibatch Adam regression of `net` over the samples in idx.
template <typename InputFn, typename LossFn>
std::vector<double> regress(ConvNet& net, InputFn&& input,
                            std::vector<std::size_t> idx, const BCConfig& cfg, LossFn&& fn) {
  std::vector<double> epoch_losses;
  Adam opt(net.num_params(), cfg.learning_rate);
  Rng rng(mix_seed(cfg.seed, kBcStream));
  std::vector<double> grad;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    double sum = 0.0;
    int batches = 0;
    for (std::size_t b = 0; b < idx.size(); b += bs) {
      const std::size_t e = std::min(idx.size(), b + bs);
      const std::span<const std::size_t> mb(idx.data() + b, e - b);
      const double l = mean_loss_and_grad(net, input, mb, fn, grad);
      if (!std::isfinite(l)) throw NumericError("regression loss is not finite");
      opt.step(net.params(), grad);
      sum += l;
      ++batches;
    }
    epoch_losses.push_back(sum / batches);
  }
  return epoch_losses;
}

auto canvas_at(std::span<const Canvas> inputs) {
  return [inputs](std::size_t i) -> const Canvas& { return inputs[i]; };
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InvalidArgument(std::string(what) + ": inputs and targets differ in length");
  if (a == 0) throw InvalidArgument(std::string(what) + ": empty batch");
}

bool log_std_free(double v) { return v >= kMinLogStd && v <= kMaxLogStd; }

double gaussian_entropy(const ActionVector& log_std) {
  const double k = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  double h = 0.0;
  for (double v : log_std) h += std::clamp(v, kMinLogStd, kMaxLogStd) + k;
  return h;
}

SurrogateResult surrogate_indexed(const NetParams& params, std::span<const PPOSample> batch,
                                  std::span<const double> adv, std::span<const std::size_t> idx,
                                  double clip_epsilon, double entropy_coeff) {
  const std::size_t np = params.policy.num_params();
  // layout: policy grad | log_std grad | loss | clipped count | kl
  const std::size_t n_out = np + kActionDim + 3;
  std::vector<double> acc(n_out);
  kernels::parallel_accumulate(
      idx.size(), acc, make_workspace(kActionDim),
      [&](std::size_t k, std::span<double> g, Workspace& ws) {
        const std::size_t i = idx[k];
        const PPOSample& s = batch[i];
        const auto out = params.policy.forward(s.input.data(), ws.cache);
        for (double v : out) {
          if (!std::isfinite(v)) throw NumericError("policy network produced a non-finite output");
        }
        const ActionDistribution dist = make_distribution(out, params.log_std);
        const double ratio = std::exp(log_prob(dist, s.pre_squash) - s.log_prob_old);
        const double a = adv[i];
        const double clipped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
        g[np + kActionDim] -= std::min(ratio * a, clipped * a);
        g[np + kActionDim + 2] += (ratio - 1.0) - std::log(ratio);
        const bool active = a >= 0.0 ? ratio <= 1.0 + clip_epsilon : ratio >= 1.0 - clip_epsilon;
        if (!active) {
          g[np + kActionDim + 1] += 1.0;
          return;
        }
        const double coef = -ratio * a;
        for (int d = 0; d < kActionDim; ++d) {
          const double z = (s.pre_squash[d] - dist.pre_mean[d]) / dist.std[d];
          ws.d_out[d] = coef * z / dist.std[d];
          if (log_std_free(params.log_std[d])) g[np + d] += coef * (z * z - 1.0);
        }
        params.policy.backward(ws.cache, ws.d_out, g.first(np));
      });
  const double inv = 1.0 / static_cast<double>(idx.size());
  SurrogateResult r;
  r.grad_policy.assign(acc.begin(), acc.begin() + np);
  for (double& v : r.grad_policy) v *= inv;
  r.entropy = gaussian_entropy(params.log_std);
  for (int d = 0; d < kActionDim; ++d) {
    r.grad_log_std[d] = acc[np + d] * inv;
    if (log_std_free(params.log_std[d])) r.grad_log_std[d] -= entropy_coeff;
  }
  r.loss = acc[np + kActionDim] * inv - entropy_coeff * r.entropy;
  r.clip_fraction = acc[np + kActionDim + 1] * inv;
  r.approx_kl = acc[np + kActionDim + 2] * inv;
  return r;
}

std::vector<StartSpec> start_specs(std::span<const StartMode> modes) {
  std::vector<StartSpec> out;
  for (StartMode m : modes) {
    switch (m) {
      case StartMode::kBlank: out.push_back(StartSpec::blank()); break;
      case StartMode::kRandom: out.push_back(StartSpec::random()); break;
      case StartMode::kGiven: throw InvalidArgument("training start modes must be blank or random");
    }
  }
  return out;
}

void episode_summary(std::span<const Episode> eps, TrainStats& s) {
  if (eps.empty()) return;
  double reward = 0.0;
  double length = 0.0;
  for (const auto& e : eps) {
    reward += e.total_reward();
    length += static_cast<double>(e.length());
  }
  s.mean_episode_reward = reward / static_cast<double>(eps.size());
  s.mean_episode_length = length / static_cast<double>(eps.size());
}

}  // namespace

void BCConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("bc.epochs must be >= 0");
  if (batch_size < 1) throw InvalidArgument("bc.batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("bc.learning_rate must be positive");
  }
}

void PPOConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) {
    throw InvalidArgument("ppo.clip_epsilon must lie in (0, 1)");
  }
  if (epochs_per_batch < 1) throw InvalidArgument("ppo.epochs_per_batch must be >= 1");
  if (minibatch_size < 1) throw InvalidArgument("ppo.minibatch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("ppo.learning_rate must be positive");
  }
  if (rollout_batch < 1) throw InvalidArgument("ppo.rollout_batch must be >= 1");
  if (iterations < 0) throw InvalidArgument("ppo.iterations must be >= 0");
  if (!(entropy_coeff >= 0.0)) throw InvalidArgument("ppo.entropy_coeff must be >= 0");
  if (!(value_coeff >= 0.0)) throw InvalidArgument("ppo.value_coeff must be >= 0");
  if (!std::isfinite(max_grad_norm)) throw InvalidArgument("ppo.max_grad_norm must be finite");
}

void PipelineConfig::validate() const {
  if (env_steps < 1) throw InvalidArgument("pipeline.env_steps must be >= 1");
  if (!(ssl_fraction > 0.0 && ssl_fraction < 1.0)) {
    throw InvalidArgument("pipeline.ssl_fraction must lie in (0, 1)");
  }
  if (bc_every < 1) throw InvalidArgument("pipeline.bc_every must be >= 1");
  if (refresh_epochs < 0) throw InvalidArgument("pipeline.refresh_epochs must be >= 0");
  if (refresh_samples < 0) throw InvalidArgument("pipeline.refresh_samples must be >= 0");
  if (start_modes.empty()) throw InvalidArgument("pipeline.start_modes must not be empty");
  arch.validate();
}

std::vector<Canvas> assemble_inputs(const SelfSupervisedDataset& data) {
  std::vector<Canvas> out(data.samples.size());
  kernels::parallel_for(out.size(),
                        [&](std::size_t i) { out[i] = assemble_input(data.samples[i].obs_hat); });
  return out;
}

double bc_objective(const NetParams& params, std::span<const Canvas> inputs,
                    std::span<const BrushAction> actions) {
  require_same_size(inputs.size(), actions.size(), "bc_objective");
  const auto idx = identity_indices(inputs.size());
  return mean_loss(params.policy, canvas_at(inputs), idx,
                   [&](std::size_t i, std::span<const double> out, std::span<double> d) {
                     return bc_sample_loss(out, actions[i], d);
                   });
}

double value_objective(const NetParams& params, std::span<const Canvas> inputs,
                       std::span<const double> targets) {
  require_same_size(inputs.size(), targets.size(), "value_objective");
  const auto idx = identity_indices(inputs.size());
  return mean_loss(params.value, canvas_at(inputs), idx,
                   [&](std::size_t i, std::span<const double> out, std::span<double> d) {
                     return value_sample_loss(out, targets[i], d);
                   });
}

std::vector<double> bc_gradient(const NetParams& params, std::span<const Canvas> inputs,
                                std::span<const BrushAction> actions) {
  require_same_size(inputs.size(), actions.size(), "bc_gradient");
  const auto idx = identity_indices(inputs.size());
  std::vector<double> grad;
  mean_loss_and_grad(params.policy, canvas_at(inputs), idx,
                     [&](std::size_t i, std::span<const double> out, std::span<double> d) {
                       return bc_sample_loss(out, actions[i], d);
                     },
                     grad);
  return grad;
}

RegressionResult behavior_clone(const NetParams& params, const SelfSupervisedDataset& data,
                                const BCConfig& cfg) {
  cfg.validate();
  require_finite(params);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (!cfg.reward_filter || data.samples[i].reward_hat > 0.0) idx.push_back(i);
  }
  if (idx.empty()) throw InvalidArgument("behavior cloning needs a non-empty dataset");
  const auto inputs = assemble_inputs(data);
  auto fn = [&](std::size_t i, std::span<const double> out, std::span<double> d) {
    return bc_sample_loss(out, data.samples[i].action, d);
  };
  RegressionResult r{params, {}, 0.0, 0.0, idx.size()};
  r.initial_loss = mean_loss(r.params.policy, canvas_at(inputs), idx, fn);
  r.epoch_losses = regress(r.params.policy, canvas_at(inputs), idx, cfg, fn);
  r.final_loss = cfg.epochs == 0 ? r.initial_loss : mean_loss(r.params.policy, canvas_at(inputs), idx, fn);
  return r;
}

RegressionResult fit_value(const NetParams& params, const SelfSupervisedDataset& data,
                           const BCConfig& cfg) {
  cfg.validate();
  require_finite(params);
  if (data.samples.empty()) throw InvalidArgument("value fitting needs a non-empty dataset");
  const auto idx = identity_indices(data.samples.size());
  const auto inputs = assemble_inputs(data);
  auto fn = [&](std::size_t i, std::span<const double> out, std::span<double> d) {
    return value_sample_loss(out, data.samples[i].return_hat, d);
  };
  RegressionResult r{params, {}, 0.0, 0.0, idx.size()};
  r.initial_loss = mean_loss(r.params.value, canvas_at(inputs), idx, fn);
  r.epoch_losses = regress(r.params.value, canvas_at(inputs), idx, cfg, fn);
  r.final_loss = cfg.epochs == 0 ? r.initial_loss : mean_loss(r.params.value, canvas_at(inputs), idx, fn);
  return r;
}

std::vector<PPOSample> ppo_samples(std::span<const Episode> episodes, double gamma) {
  std::vector<std::size_t> offset(episodes.size() + 1, 0);
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    offset[e + 1] = offset[e] + episodes[e].length();
  }
  std::vector<PPOSample> out(offset.back());
  kernels::parallel_for(episodes.size(), [&](std::size_t e) {
    const Episode& ep = episodes[e];
    std::vector<double> rewards(ep.length());
    for (std::size_t t = 0; t < ep.length(); ++t) rewards[t] = ep.transitions[t].reward;
    const auto q = discounted_returns(rewards, gamma);
    for (std::size_t t = 0; t < ep.length(); ++t) {
      const Transition& tr = ep.transitions[t];
      PPOSample& s = out[offset[e] + t];
      s.input = assemble_input(tr.obs);
      s.pre_squash = tr.pre_squash;
      s.log_prob_old = tr.log_prob;
      s.ret = q[t];
    }
  });
  return out;
}

SurrogateResult policy_surrogate(const NetParams& params, std::span<const PPOSample> batch,
                                 std::span<const double> advantages, double clip_epsilon,
                                 double entropy_coeff) {
  require_same_size(batch.size(), advantages.size(), "policy_surrogate");
  const auto idx = identity_indices(batch.size());
  return surrogate_indexed(params, batch, advantages, idx, clip_epsilon, entropy_coeff);
}

std::vector<double> importance_ratios(const NetParams& params, std::span<const PPOSample> batch) {
  std::vector<double> r(batch.size());
  kernels::parallel_for(batch.size(), [&](std::size_t i) {
    const auto dist = forward_policy(params, batch[i].input);
    r[i] = std::exp(log_prob(dist, batch[i].pre_squash) - batch[i].log_prob_old);
  });
  return r;
}

std::vector<double> compute_advantages(const NetParams& params, std::span<const PPOSample> batch) {
  if (batch.empty()) throw InvalidArgument("advantages need a non-empty batch");
  std::vector<double> a(batch.size());
  kernels::parallel_for(batch.size(), [&](std::size_t i) {
    a[i] = batch[i].ret - forward_value(params, batch[i].input);
  });
  double mean = 0.0;
  for (double v : a) {
    if (!std::isfinite(v)) throw NumericError("advantage is not finite");
    mean += v;
  }
  mean /= static_cast<double>(a.size());
  double var = 0.0;
  for (double v : a) var += (v - mean) * (v - mean);
  var /= static_cast<double>(a.size());
  const double sd = std::sqrt(var);
  for (double& v : a) v = sd > 0.0 ? (v - mean) / sd : v - mean;
  return a;
}

PPOTrainer::PPOTrainer(const NetParams& params, const PPOConfig& cfg)
    : cfg_(cfg),
      policy_opt_(params.policy.num_params(), cfg.learning_rate),
      log_std_opt_(kActionDim, cfg.learning_rate),
      value_opt_(params.value.num_params(), cfg.learning_rate) {
  cfg_.validate();
}

PPOStats PPOTrainer::update(NetParams& params, std::span<const PPOSample> batch) {
  if (batch.empty()) throw InvalidArgument("ppo update needs a non-empty batch");
  require_finite(params);
  const auto adv = compute_advantages(params, batch);
  Rng rng(mix_seed(cfg_.seed, kPpoStream, updates_));
  auto idx = identity_indices(batch.size());
  const std::size_t mbs = static_cast<std::size_t>(cfg_.minibatch_size);
  auto input = [&](std::size_t i) -> const Canvas& { return batch[i].input; };
  auto value_fn = [&](std::size_t i, std::span<const double> out, std::span<double> d) {
    return value_sample_loss(out, batch[i].ret, d);
  };

  PPOStats stats;
  int minibatches = 0;
  std::vector<double> value_grad;
  for (int epoch = 0; epoch < cfg_.epochs_per_batch; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t b = 0; b < idx.size(); b += mbs) {
      const std::span<const std::size_t> mb(idx.data() + b, std::min(idx.size(), b + mbs) - b);
      SurrogateResult s =
          surrogate_indexed(params, batch, adv, mb, cfg_.clip_epsilon, cfg_.entropy_coeff);
      const double vloss = mean_loss_and_grad(params.value, input, mb, value_fn, value_grad);
      if (!std::isfinite(s.loss) || !std::isfinite(vloss)) {
        throw NumericError("ppo loss is not finite");
      }
      for (double& g : value_grad) g *= cfg_.value_coeff;
      clip_by_norm(s.grad_policy, s.grad_log_std, cfg_.max_grad_norm);
      clip_by_norm(value_grad, {}, cfg_.max_grad_norm);
      policy_opt_.step(params.policy.params(), s.grad_policy);
      log_std_opt_.step(params.log_std, s.grad_log_std);
      for (double& v : params.log_std) v = std::clamp(v, kMinLogStd, kMaxLogStd);
      value_opt_.step(params.value.params(), value_grad);
      stats.surrogate_loss += s.loss;
      stats.value_loss += vloss;
      stats.clip_fraction += s.clip_fraction;
      stats.approx_kl += s.approx_kl;
      ++minibatches;
    }
  }
  const double inv = 1.0 / minibatches;
  stats.surrogate_loss *= inv;
  stats.value_loss *= inv;
  stats.clip_fraction *= inv;
  stats.approx_kl *= inv;
  stats.entropy = gaussian_entropy(params.log_std);
  ++updates_;
  return stats;
}

std::pair<NetParams, PPOStats> ppo_update(const NetParams& params, std::span<const PPOSample> batch,
                                          const PPOConfig& cfg) {
  NetParams out = params;
  PPOTrainer trainer(out, cfg);
  const PPOStats stats = trainer.update(out, batch);
  return {std::move(out), stats};
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::kRlOnly: return "rl_only";
    case Scheme::kSslOnly: return "ssl_only";
    case Scheme::kCombined: return "combined";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "rl_only") return Scheme::kRlOnly;
  if (s == "ssl_only") return Scheme::kSslOnly;
  if (s == "combined") return Scheme::kCombined;
  throw InvalidArgument("unknown scheme '" + s + "' (expected rl_only, ssl_only or combined)");
}

nlohmann::json to_json(const TrainStats& s) {
  return {{"iteration", s.iteration},
          {"scheme", s.scheme},
          {"phase", s.phase},
          {"env_steps", s.env_steps},
          {"mean_episode_reward", s.mean_episode_reward},
          {"mean_episode_length", s.mean_episode_length},
          {"bc_loss", s.bc_loss},
          {"value_fit_loss", s.value_fit_loss},
          {"surrogate_loss", s.surrogate_loss},
          {"value_loss", s.value_loss}};
}

void write_train_stats(std::ostream& out, std::span<const TrainStats> history) {
  for (const auto& s : history) out << to_json(s).dump() << '\n';
}

TrainResult train_pipeline(std::span<const Canvas> goals, const EnvConfig& env_cfg,
                           const BCConfig& bc_cfg, const PPOConfig& ppo_cfg,
                           const PipelineConfig& pipe_cfg, Scheme scheme) {
  if (goals.empty()) throw InvalidArgument("training needs at least one goal image");
  env_cfg.validate();
  bc_cfg.validate();
  ppo_cfg.validate();
  pipe_cfg.validate();
  if (pipe_cfg.arch.input_h != 2 * env_cfg.patch.height ||
      pipe_cfg.arch.input_w != 2 * env_cfg.patch.width) {
    throw InvalidArgument("network input must be twice the observation patch size");
  }

  TrainResult result{init_params(pipe_cfg.arch, pipe_cfg.init), {}, 0, 0};
  if (ppo_cfg.iterations == 0) return result;

  NetParams& params = result.params;
  const auto starts = start_specs(pipe_cfg.start_modes);
  EnvConfig cfg = env_cfg;
  cfg.seed = mix_seed(pipe_cfg.seed, kEnvStream);
  const std::string name = to_string(scheme);
  std::int64_t next_episode = 0;
  std::uint64_t bc_calls = 0;

  auto supervised = [&](const SelfSupervisedDataset& data, int epochs, bool value,
                        TrainStats& st) {
    BCConfig c = bc_cfg;
    c.epochs = epochs;
    c.seed = mix_seed(bc_cfg.seed, pipe_cfg.seed, bc_calls++);
    bool any_positive = !c.reward_filter;
    for (const auto& s : data.samples) any_positive = any_positive || s.reward_hat > 0.0;
    if (any_positive) {
      auto bc = behavior_clone(params, data, c);
      params.policy = std::move(bc.params.policy);
      st.bc_loss = bc.final_loss;
    }
    if (!value) return;
    auto vf = fit_value(params, data, c);
    params.value = std::move(vf.params.value);
    st.value_fit_loss = vf.final_loss;
  };
  SelfSupervisedDataset pool;
  Rng pool_rng(mix_seed(pipe_cfg.seed, kPoolStream));

  auto collect = [&](const Policy& policy, const EnvConfig& c, std::int64_t steps) {
    CollectedEpisodes col = collect_episodes(policy, goals, c, steps, starts, next_episode);
    next_episode = col.next_episode;
    result.env_steps += col.env_steps;
    return col;
  };

  if (scheme == Scheme::kSslOnly || scheme == Scheme::kCombined) {
    const std::int64_t steps =
        scheme == Scheme::kSslOnly
            ? pipe_cfg.env_steps
            : std::max<std::int64_t>(1, std::llround(pipe_cfg.env_steps * pipe_cfg.ssl_fraction));
    EnvConfig random_cfg = cfg;
    random_cfg.stop_rule = pipe_cfg.collect_stop_rule;
    const CollectedEpisodes col = collect(RandomPolicy(), random_cfg, steps);
    SelfSupervisedDataset data = relabel_collection(col, cfg);
    if (data.empty()) throw EmptyDataset("every bootstrap episode was degenerate");
    TrainStats st;
    st.scheme = name;
    st.phase = "ssl";
    episode_summary(col.episodes, st);
    supervised(data, bc_cfg.epochs, true, st);
    if (scheme == Scheme::kCombined && pipe_cfg.refresh_samples > 0) pool = std::move(data);
    st.env_steps = result.env_steps;
    result.history.push_back(st);
  }
  if (scheme == Scheme::kSslOnly) return result;

  PPOTrainer trainer(params, ppo_cfg);
  for (int it = 1; it <= ppo_cfg.iterations && result.env_steps < pipe_cfg.env_steps; ++it) {
    const std::int64_t steps =
        std::min<std::int64_t>(ppo_cfg.rollout_batch, pipe_cfg.env_steps - result.env_steps);
    const CollectedEpisodes col = collect(NetworkPolicy(params, true), cfg, steps);
    const auto batch = ppo_samples(col.episodes, cfg.gamma);
    TrainStats st;
    st.iteration = it;
    st.scheme = name;
    st.phase = "ppo";
    episode_summary(col.episodes, st);
    const PPOStats ps = trainer.update(params, batch);
    st.surrogate_loss = ps.surrogate_loss;
    st.value_loss = ps.value_loss;
    if (scheme == Scheme::kCombined && pipe_cfg.refresh_epochs > 0) {
      SelfSupervisedDataset data = relabel_collection(col, cfg);
      const bool refresh = it % pipe_cfg.bc_every == 0;
      if (pipe_cfg.refresh_samples > 0) {
        pool.append(std::move(data));
        data = refresh ? subsample(pool, static_cast<std::size_t>(pipe_cfg.refresh_samples), pool_rng)
                       : SelfSupervisedDataset{};
      }
      if (refresh && !data.empty()) {
        supervised(data, pipe_cfg.refresh_epochs, pipe_cfg.refresh_value, st);
      }
    }
    st.env_steps = result.env_steps;
    result.history.push_back(st);
  }
  result.ppo_updates = trainer.updates();
  return result;
}

}  // namespace hindpaint
