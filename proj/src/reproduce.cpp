#include "hindpaint/reproduce.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hindpaint/error.hpp"
#include "hindpaint/hash.hpp"
#include "hindpaint/json_util.hpp"
#include "hindpaint/kernels.hpp"

namespace hindpaint {

namespace {

constexpr const char* kStrokeFormat = "hindpaint.strokes";
constexpr int kStrokeVersion = 1;
constexpr std::uint64_t kPositionStream = 3;

StrokeModel stroke_model(const RuntimeConfig& cfg) {
  return StrokeModel::for_patch(cfg.patch.height, cfg.patch.width, cfg.max_radius);
}

BrushState sample_position(Rng& rng, int h, int w) {
  const int row = static_cast<int>(uniform_int(rng, 0, h - 1));
  const int col = static_cast<int>(uniform_int(rng, 0, w - 1));
  return {row, col};
}

void check_start(const Canvas& reference, const Canvas& start, const RuntimeConfig& cfg) {
  if (reference.empty()) throw InvalidArgument("reference image is empty");
  if (!start.same_shape(reference)) {
    throw InvalidArgument("start canvas does not match the reference dimensions");
  }
  if (reference.height() < cfg.patch.height || reference.width() < cfg.patch.width) {
    throw InvalidArgument("reference image is smaller than the observation patch");
  }
}

}  // namespace

void RuntimeConfig::validate() const {
  if (!(thresh_sim > 0.0) || !std::isfinite(thresh_sim)) {
    throw InvalidArgument("runtime.thresh_sim must be positive");
  }
  if (max_total_strokes < 1) throw InvalidArgument("runtime.max_total_strokes must be >= 1");
  if (patch.height < 1 || patch.width < 1) throw InvalidArgument("runtime.patch must be >= 1");
  if (max_radius < 1) throw InvalidArgument("runtime.max_radius must be >= 1");
  if (strokes_per_position < 1) throw InvalidArgument("runtime.strokes_per_position must be >= 1");
}

nlohmann::json to_json(const RuntimeConfig& c) {
  return {{"thresh_sim", c.thresh_sim},
          {"max_total_strokes", c.max_total_strokes},
          {"patch", {c.patch.height, c.patch.width}},
          {"seed", c.seed},
          {"max_radius", c.max_radius},
          {"strokes_per_position", c.strokes_per_position},
          {"fill", {c.fill.r, c.fill.g, c.fill.b}}};
}

RuntimeConfig runtime_config_from_json(const nlohmann::json& j, const std::string& path) {
  StrictObject o(j, path);
  RuntimeConfig c;
  c.thresh_sim = o.optional<double>("thresh_sim", c.thresh_sim);
  c.max_total_strokes = o.optional<int>("max_total_strokes", c.max_total_strokes);
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
  c.seed = o.optional<std::uint64_t>("seed", c.seed);
  c.max_radius = o.optional<int>("max_radius", c.max_radius);
  c.strokes_per_position = o.optional<int>("strokes_per_position", c.strokes_per_position);
  if (o.has("fill")) {
    const auto& f = o.child("fill");
    if (!f.is_array() || f.size() != 3 || !f[0].is_number() || !f[1].is_number() ||
        !f[2].is_number()) {
      throw ConfigError(o.where("fill") + ": expected [r, g, b]");
    }
    c.fill = {f[0].get<float>(), f[1].get<float>(), f[2].get<float>()};
  }
  o.finish();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return c;
}

const char* to_string(PaintStatus s) {
  return s == PaintStatus::kConverged ? "converged" : "budget_exhausted";
}

PaintResult paint_image(const NetParams& params, const Canvas& reference,
                        const RuntimeConfig& cfg) {
  return paint_image(params, reference, cfg,
                     blank_canvas(reference.height(), reference.width(), cfg.fill));
}

PaintResult paint_image(const NetParams& params, const Canvas& reference,
                        const RuntimeConfig& cfg, const Canvas& start) {
  cfg.validate();
  require_finite(params);
  check_start(reference, start, cfg);
  if (params.arch.input_h != 2 * cfg.patch.height || params.arch.input_w != 2 * cfg.patch.width) {
    throw InvalidArgument("network input does not match the runtime patch size");
  }
  const StrokeModel model = stroke_model(cfg);
  const Canvas global_ref = downsample_area(reference, cfg.patch.height, cfg.patch.width);

  PaintResult res;
  res.canvas = start;
  res.log.config = cfg;
  res.log.height = reference.height();
  res.log.width = reference.width();
  res.log.reference_hash = reference.hash();
  res.log.start_hash = start.hash();
  double loss = l2_loss(res.canvas, reference);
  res.loss_trace.push_back(loss);

  Rng rng(mix_seed(cfg.seed, kPositionStream));
  int strokes = 0;
  bool converged = loss < cfg.thresh_sim;
  while (!converged && strokes < cfg.max_total_strokes) {
    BrushState brush = sample_position(rng, reference.height(), reference.width());
    ++res.resamples;
    for (int k = 0; k < cfg.strokes_per_position && strokes < cfg.max_total_strokes; ++k) {
      const Observation obs =
          observe_with_global_ref(res.canvas, reference, global_ref, brush, cfg.patch);
      const Canvas input = assemble_input(obs);
      if (k > 0 && forward_value(params, input) < 0.0) break;
      const SampledAction a = mean_action(forward_policy(params, input));
      res.log.strokes.push_back({brush, k == 0, a.action});
      brush = render_action_inplace(res.canvas, brush, a.action, model);
      loss = l2_loss(res.canvas, reference);
      res.loss_trace.push_back(loss);
      ++strokes;
      if (loss < cfg.thresh_sim) {
        converged = true;
        break;
      }
    }
  }
  res.status = converged ? PaintStatus::kConverged : PaintStatus::kBudgetExhausted;
  res.final_loss = loss;
  res.log.final_hash = res.canvas.hash();
  return res;
}

namespace {

ReplayResult replay_impl(const StrokeLog& log, const Canvas* reference, const Canvas& start) {
  if (reference != nullptr &&
      (reference->height() != log.height || reference->width() != log.width ||
       reference->hash() != log.reference_hash)) {
    throw IntegrityError("reference image does not match the stroke log");
  }
  if (start.height() != log.height || start.width() != log.width || start.hash() != log.start_hash) {
    throw IntegrityError("start canvas does not match the stroke log");
  }
  const StrokeModel model = stroke_model(log.config);
  ReplayResult out;
  out.canvas = start;
  if (reference != nullptr) out.loss_trace.push_back(l2_loss(out.canvas, *reference));
  for (const auto& s : log.strokes) {
    if (s.brush.row < 0 || s.brush.row >= log.height || s.brush.col < 0 ||
        s.brush.col >= log.width) {
      throw IntegrityError("stroke log position lies outside the canvas");
    }
    render_action_inplace(out.canvas, s.brush, s.action, model);
    if (reference != nullptr) out.loss_trace.push_back(l2_loss(out.canvas, *reference));
  }
  if (out.canvas.hash() != log.final_hash) {
    throw IntegrityError("replayed canvas hash does not match the stroke log");
  }
  return out;
}

Canvas log_blank(const StrokeLog& log) {
  if (log.height < 1 || log.width < 1) throw IntegrityError("stroke log has invalid dimensions");
  return blank_canvas(log.height, log.width, log.config.fill);
}

}  // namespace

ReplayResult replay_strokes(const StrokeLog& log) {
  return replay_impl(log, nullptr, log_blank(log));
}

ReplayResult replay_strokes(const StrokeLog& log, const Canvas& reference) {
  return replay_impl(log, &reference, log_blank(log));
}

ReplayResult replay_strokes(const StrokeLog& log, const Canvas& reference, const Canvas& start) {
  return replay_impl(log, &reference, start);
}

void save_stroke_log(const std::filesystem::path& path, const StrokeLog& log) {
  nlohmann::json strokes = nlohmann::json::array();
  for (const auto& s : log.strokes) {
    nlohmann::json e = {s.brush.row, s.brush.col, s.resampled};
    for (double v : s.action.as_array()) e.push_back(v);
    strokes.push_back(std::move(e));
  }
  const nlohmann::json j = {{"format", kStrokeFormat},
                            {"version", kStrokeVersion},
                            {"config", to_json(log.config)},
                            {"height", log.height},
                            {"width", log.width},
                            {"reference_hash", hex_digest(log.reference_hash)},
                            {"start_hash", hex_digest(log.start_hash)},
                            {"final_hash", hex_digest(log.final_hash)},
                            {"strokes", std::move(strokes)}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

StrokeLog load_stroke_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  StrokeLog log;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format") != kStrokeFormat || j.at("version") != kStrokeVersion) {
      throw IntegrityError("'" + path.string() + "' is not a version 1 stroke log");
    }
    log.config = runtime_config_from_json(j.at("config"), "config");
    log.height = j.at("height").get<int>();
    log.width = j.at("width").get<int>();
    log.reference_hash = parse_hex_digest(j.at("reference_hash").get<std::string>());
    log.start_hash = parse_hex_digest(j.at("start_hash").get<std::string>());
    log.final_hash = parse_hex_digest(j.at("final_hash").get<std::string>());
    for (const auto& e : j.at("strokes")) {
      if (!e.is_array() || e.size() != 3 + kActionDim) {
        throw IntegrityError("stroke entry must hold row, col, resampled and 6 action values");
      }
      StrokeEntry s;
      s.brush = {e[0].get<int>(), e[1].get<int>()};
      s.resampled = e[2].get<bool>();
      ActionVector a{};
      for (int d = 0; d < kActionDim; ++d) a[d] = e[3 + d].get<double>();
      s.action = BrushAction::from_array(a);
      log.strokes.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("malformed stroke log '" + path.string() + "': " + e.what());
  } catch (const ConfigError& e) {
    throw IntegrityError("malformed stroke log '" + path.string() + "': " + e.what());
  }
  return log;
}

void write_loss_trace_csv(std::ostream& out, std::span<const double> trace) {
  out << "stroke,l2_loss\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

void write_loss_trace_csv(const std::filesystem::path& path, std::span<const double> trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_loss_trace_csv(out, trace);
}

BenchmarkMetrics evaluate_benchmark(const NetParams& params, std::span<const BenchmarkPatch> patches,
                                    const EnvConfig& env) {
  if (patches.empty()) throw InvalidArgument("benchmark needs at least one patch");
  env.validate();
  require_finite(params);
  BenchmarkMetrics m;
  m.patches.resize(patches.size());
  const NetworkPolicy policy(params, false);
  kernels::parallel_for(patches.size(), [&](std::size_t i) {
    EnvConfig cfg = env;
    cfg.seed = mix_seed(env.seed, i);
    PatchMetrics& pm = m.patches[i];
    const StartSpec start = StartSpec::given(patches[i].start);
    try {
      PaintEnv e(cfg, patches[i].goal, start);
      const Episode ep = rollout(policy, e);
      pm.cumulative_reward = ep.total_reward();
      pm.initial_l2 = ep.initial_loss;
      pm.final_l2 = e.current_loss();
      pm.steps = static_cast<std::int64_t>(ep.length());
      pm.log = make_episode_log(ep, cfg, start);
    } catch (const DegenerateEpisode&) {
      pm.degenerate = true;
    }
  });
  for (const auto& pm : m.patches) {
    if (pm.degenerate) continue;
    m.mean_cumulative_reward += pm.cumulative_reward;
    m.mean_final_l2 += pm.final_l2;
    ++m.evaluated;
  }
  if (m.evaluated > 0) {
    m.mean_cumulative_reward /= static_cast<double>(m.evaluated);
    m.mean_final_l2 /= static_cast<double>(m.evaluated);
  }
  return m;
}

}  // namespace hindpaint
