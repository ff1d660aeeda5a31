#include "hindpaint/config.hpp"

#include <fstream>

#include "hindpaint/benchmark.hpp"
#include "hindpaint/error.hpp"
#include "hindpaint/image_io.hpp"
#include "hindpaint/json_util.hpp"

namespace hindpaint {

namespace {

enum SeedStream : std::uint64_t {
  kEnvSeed = 1,
  kInitSeed,
  kBcSeed,
  kPpoSeed,
  kPipelineSeed,
  kRuntimeSeed,
  kTrainImageSeed,
  kTrainWindowSeed,
};

PatchSpec patch_from_json(const nlohmann::json& p, const std::string& where) {
  if (p.is_number_integer()) return {p.get<int>(), p.get<int>()};
  if (p.is_array() && p.size() == 2 && p[0].is_number_integer() && p[1].is_number_integer()) {
    return {p[0].get<int>(), p[1].get<int>()};
  }
  throw ConfigError(where + ": expected an integer or [h, w]");
}

template <typename T, typename Parse>
std::vector<T> list_from_json(const nlohmann::json& j, const std::string& where, Parse parse) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array");
  std::vector<T> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(where + ": expected strings");
    try {
      out.push_back(parse(v.get<std::string>()));
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return out;
}

void reject_seed(const nlohmann::json& j, const std::string& where) {
  if (j.is_object() && j.contains("seed")) {
    throw ConfigError(where + ".seed: seeds derive from the top-level seed");
  }
}

ImageSource images_from_json(const nlohmann::json& j, const std::string& where,
                             const std::filesystem::path& base) {
  StrictObject o(j, where);
  ImageSource s;
  if (o.has("paths")) {
    const auto& p = o.child("paths");
    if (!p.is_array()) throw ConfigError(o.where("paths") + ": expected an array of strings");
    for (const auto& v : p) {
      if (!v.is_string()) throw ConfigError(o.where("paths") + ": expected an array of strings");
      std::filesystem::path path = v.get<std::string>();
      s.paths.push_back(path.is_absolute() ? path : (base / path).lexically_normal());
    }
  }
  if (o.has("synthetic")) {
    StrictObject syn(o.child("synthetic"), o.where("synthetic"));
    s.synthetic_count = syn.required<int>("count");
    s.synthetic_height = syn.optional<int>("height", s.synthetic_height);
    s.synthetic_width = syn.optional<int>("width", s.synthetic_width);
    syn.finish();
    if (s.synthetic_count < 1 || s.synthetic_height < 1 || s.synthetic_width < 1) {
      throw ConfigError(syn.where() + ": count and size must be >= 1");
    }
  }
  o.finish();
  if (s.paths.empty() && s.synthetic_count == 0) {
    throw ConfigError(where + ": needs image paths or a synthetic section");
  }
  return s;
}

nlohmann::json to_json(const ImageSource& s) {
  nlohmann::json j = nlohmann::json::object();
  if (!s.paths.empty()) {
    nlohmann::json p = nlohmann::json::array();
    for (const auto& path : s.paths) p.push_back(path.string());
    j["paths"] = p;
  }
  if (s.synthetic_count > 0) {
    j["synthetic"] = {{"count", s.synthetic_count},
                      {"height", s.synthetic_height},
                      {"width", s.synthetic_width}};
  }
  return j;
}

NetArch arch_from_json(const nlohmann::json& j, const PatchSpec& patch) {
  StrictObject o(j, "network");
  const std::string kind = o.optional<std::string>("kind", "full_scale");
  NetArch a;
  if (kind == "full_scale") {
    a = NetArch::full_scale();
  } else if (kind == "compact") {
    const int filters = o.optional<int>("filters", 16);
    const int hidden = o.optional<int>("hidden", 64);
    if (patch.height != patch.width) throw ConfigError("network: compact trunk needs a square patch");
    if (filters < 1 || hidden < 1) throw ConfigError("network: filters and hidden must be >= 1");
    a = NetArch::compact(2 * patch.height, filters, hidden);
  } else {
    throw ConfigError("network.kind: expected full_scale or compact, got '" + kind + "'");
  }
  o.finish();
  if (a.input_h != 2 * patch.height || a.input_w != 2 * patch.width) {
    throw ConfigError("network: input " + std::to_string(a.input_h) + "x" +
                      std::to_string(a.input_w) + " must be twice the observation patch");
  }
  try {
    a.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  return a;
}

nlohmann::json arch_json(const NetArch& a) {
  if (a == NetArch::full_scale()) return {{"kind", "full_scale"}};
  return {{"kind", "compact"}, {"filters", a.convs.front().filters}, {"hidden", a.hidden}};
}

template <typename Fn>
void as_config_error(const std::string& where, Fn&& fn) {
  try {
    fn();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

void RunConfig::derive_seeds() {
  env.seed = mix_seed(seed, kEnvSeed);
  init.seed = mix_seed(seed, kInitSeed);
  bc.seed = mix_seed(seed, kBcSeed);
  ppo.seed = mix_seed(seed, kPpoSeed);
  pipeline.seed = mix_seed(seed, kPipelineSeed);
  runtime.seed = mix_seed(seed, kRuntimeSeed);
  pipeline.arch = arch;
  pipeline.init = init;
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  StrictObject o(j, "");
  RunConfig c;
  c.seed = o.optional<std::uint64_t>("seed", c.seed);
  as_config_error("scheme", [&] { c.scheme = parse_scheme(o.optional<std::string>("scheme", "combined")); });
  c.threads = o.optional<int>("threads", c.threads);
  if (c.threads < 0) throw ConfigError("threads: must be >= 0");
  c.output_dir = o.optional<std::string>("output_dir", c.output_dir.string());
  if (c.output_dir.is_relative()) c.output_dir = (base_dir / c.output_dir).lexically_normal();

  if (o.has("env")) {
    reject_seed(o.child("env"), "env");
    c.env = env_config_from_json(o.child("env"), "env");
  }
  c.arch = o.has("network") ? arch_from_json(o.child("network"), c.env.patch)
                            : arch_from_json(nlohmann::json::object(), c.env.patch);

  if (o.has("init")) {
    StrictObject s(o.child("init"), "init");
    c.init.policy_head_scale = s.optional<double>("policy_head_scale", c.init.policy_head_scale);
    c.init.value_head_scale = s.optional<double>("value_head_scale", c.init.value_head_scale);
    c.init.log_std = s.optional<double>("log_std", c.init.log_std);
    s.finish();
  }
  if (o.has("bc")) {
    StrictObject s(o.child("bc"), "bc");
    c.bc.epochs = s.optional<int>("epochs", c.bc.epochs);
    c.bc.batch_size = s.optional<int>("batch_size", c.bc.batch_size);
    c.bc.learning_rate = s.optional<double>("learning_rate", c.bc.learning_rate);
    c.bc.reward_filter = s.optional<bool>("reward_filter", c.bc.reward_filter);
    s.finish();
  }
  as_config_error("bc", [&] { c.bc.validate(); });
  if (o.has("ppo")) {
    StrictObject s(o.child("ppo"), "ppo");
    auto& p = c.ppo;
    p.clip_epsilon = s.optional<double>("clip_epsilon", p.clip_epsilon);
    p.epochs_per_batch = s.optional<int>("epochs_per_batch", p.epochs_per_batch);
    p.minibatch_size = s.optional<int>("minibatch_size", p.minibatch_size);
    p.learning_rate = s.optional<double>("learning_rate", p.learning_rate);
    p.rollout_batch = s.optional<int>("rollout_batch", p.rollout_batch);
    p.iterations = s.optional<int>("iterations", p.iterations);
    p.entropy_coeff = s.optional<double>("entropy_coeff", p.entropy_coeff);
    p.value_coeff = s.optional<double>("value_coeff", p.value_coeff);
    p.max_grad_norm = s.optional<double>("max_grad_norm", p.max_grad_norm);
    s.finish();
  }
  as_config_error("ppo", [&] { c.ppo.validate(); });
  if (o.has("pipeline")) {
    StrictObject s(o.child("pipeline"), "pipeline");
    auto& p = c.pipeline;
    p.env_steps = s.optional<std::int64_t>("env_steps", p.env_steps);
    p.ssl_fraction = s.optional<double>("ssl_fraction", p.ssl_fraction);
    p.bc_every = s.optional<int>("bc_every", p.bc_every);
    p.refresh_epochs = s.optional<int>("refresh_epochs", p.refresh_epochs);
    p.refresh_samples = s.optional<int>("refresh_samples", p.refresh_samples);
    p.refresh_value = s.optional<bool>("refresh_value", p.refresh_value);
    as_config_error("pipeline.collect_stop_rule", [&] {
      p.collect_stop_rule = parse_stop_rule(
          s.optional<std::string>("collect_stop_rule", to_string(p.collect_stop_rule)));
    });
    if (s.has("start_modes")) {
      p.start_modes = list_from_json<StartMode>(s.child("start_modes"), s.where("start_modes"),
                                                parse_start_mode);
    }
    s.finish();
  }

  nlohmann::json runtime = o.has("runtime") ? o.child("runtime") : nlohmann::json::object();
  reject_seed(runtime, "runtime");
  if (runtime.is_object()) {
    if (!runtime.contains("patch")) runtime["patch"] = {c.env.patch.height, c.env.patch.width};
    if (!runtime.contains("max_radius")) runtime["max_radius"] = c.env.max_radius;
  }
  c.runtime = runtime_config_from_json(runtime, "runtime");

  if (o.has("train")) {
    StrictObject s(o.child("train"), "train");
    c.train.images = images_from_json(s.child("images"), "train.images", base_dir);
    c.train.goals = s.optional<int>("goals", c.train.goals);
    if (s.has("goal_size")) c.train.goal_size = patch_from_json(s.child("goal_size"), "train.goal_size");
    s.finish();
    if (c.train.goals < 1) throw ConfigError("train.goals: must be >= 1");
  }
  if (o.has("bench")) {
    StrictObject s(o.child("bench"), "bench");
    auto& b = c.bench;
    b.images = images_from_json(s.child("images"), "bench.images", base_dir);
    b.patch_count = s.optional<int>("patch_count", b.patch_count);
    if (s.has("patch_size")) b.patch_size = patch_from_json(s.child("patch_size"), "bench.patch_size");
    if (s.has("start_modes")) {
      b.start_modes = list_from_json<StartMode>(s.child("start_modes"), s.where("start_modes"),
                                                parse_start_mode);
    }
    if (s.has("schemes")) {
      b.schemes = list_from_json<Scheme>(s.child("schemes"), s.where("schemes"), parse_scheme);
    }
    b.replicates = s.optional<int>("replicates", b.replicates);
    s.finish();
    if (b.patch_count < 1) throw ConfigError("bench.patch_count: must be >= 1");
    if (b.replicates < 1) throw ConfigError("bench.replicates: must be >= 1");
    for (StartMode m : b.start_modes) {
      if (m == StartMode::kGiven) throw ConfigError("bench.start_modes: use blank or random");
    }
  }
  o.finish();

  c.derive_seeds();
  as_config_error("pipeline", [&] { c.pipeline.validate(); });
  for (StartMode m : c.pipeline.start_modes) {
    if (m == StartMode::kGiven) throw ConfigError("pipeline.start_modes: use blank or random");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json env = to_json(c.env);
  env.erase("seed");
  nlohmann::json runtime = to_json(c.runtime);
  runtime.erase("seed");
  nlohmann::json modes = nlohmann::json::array();
  for (StartMode m : c.pipeline.start_modes) modes.push_back(to_string(m));
  nlohmann::json bench_modes = nlohmann::json::array();
  for (StartMode m : c.bench.start_modes) bench_modes.push_back(to_string(m));
  nlohmann::json schemes = nlohmann::json::array();
  for (Scheme s : c.bench.schemes) schemes.push_back(to_string(s));
  return {
      {"seed", c.seed},
      {"scheme", to_string(c.scheme)},
      {"threads", c.threads},
      {"output_dir", c.output_dir.string()},
      {"env", env},
      {"network", arch_json(c.arch)},
      {"init",
       {{"policy_head_scale", c.init.policy_head_scale},
        {"value_head_scale", c.init.value_head_scale},
        {"log_std", c.init.log_std}}},
      {"bc",
       {{"epochs", c.bc.epochs},
        {"batch_size", c.bc.batch_size},
        {"learning_rate", c.bc.learning_rate},
        {"reward_filter", c.bc.reward_filter}}},
      {"ppo",
       {{"clip_epsilon", c.ppo.clip_epsilon},
        {"epochs_per_batch", c.ppo.epochs_per_batch},
        {"minibatch_size", c.ppo.minibatch_size},
        {"learning_rate", c.ppo.learning_rate},
        {"rollout_batch", c.ppo.rollout_batch},
        {"iterations", c.ppo.iterations},
        {"entropy_coeff", c.ppo.entropy_coeff},
        {"value_coeff", c.ppo.value_coeff},
        {"max_grad_norm", c.ppo.max_grad_norm}}},
      {"pipeline",
       {{"env_steps", c.pipeline.env_steps},
        {"ssl_fraction", c.pipeline.ssl_fraction},
        {"bc_every", c.pipeline.bc_every},
        {"refresh_epochs", c.pipeline.refresh_epochs},
        {"refresh_samples", c.pipeline.refresh_samples},
        {"refresh_value", c.pipeline.refresh_value},
        {"collect_stop_rule", to_string(c.pipeline.collect_stop_rule)},
        {"start_modes", modes}}},
      {"runtime", runtime},
      {"train",
       {{"images", to_json(c.train.images)},
        {"goals", c.train.goals},
        {"goal_size", {c.train.goal_size.height, c.train.goal_size.width}}}},
      {"bench",
       {{"images", to_json(c.bench.images)},
        {"patch_count", c.bench.patch_count},
        {"patch_size", {c.bench.patch_size.height, c.bench.patch_size.width}},
        {"start_modes", bench_modes},
        {"schemes", schemes},
        {"replicates", c.bench.replicates}}},
  };
}

std::vector<Canvas> load_images(const ImageSource& src, std::uint64_t seed) {
  std::vector<Canvas> out;
  for (const auto& p : src.paths) out.push_back(load_image(p));
  if (src.synthetic_count > 0) {
    auto syn = synthetic_paintings(src.synthetic_count, src.synthetic_height, src.synthetic_width, seed);
    for (auto& c : syn) out.push_back(std::move(c));
  }
  if (out.empty()) throw ConfigError("image source is empty");
  return out;
}

std::vector<Canvas> training_images(const RunConfig& cfg) {
  return load_images(cfg.train.images, mix_seed(cfg.seed, kTrainImageSeed));
}

std::vector<Canvas> training_goals(const RunConfig& cfg) {
  const auto images = training_images(cfg);
  const auto windows =
      sample_windows(images, cfg.train.goals, cfg.train.goal_size, mix_seed(cfg.seed, kTrainWindowSeed));
  std::vector<Canvas> goals;
  for (const auto& w : windows) goals.push_back(crop_window(images[w.source], w, cfg.train.goal_size));
  return goals;
}

}  // namespace hindpaint
