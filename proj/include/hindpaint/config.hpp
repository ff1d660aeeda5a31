#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hindpaint/env.hpp"
#include "hindpaint/learn.hpp"
#include "hindpaint/network.hpp"
#include "hindpaint/reproduce.hpp"

namespace hindpaint {

// Image files plus optional generated paintings.
struct ImageSource {
  std::vector<std::filesystem::path> paths;
  int synthetic_count = 0;
  int synthetic_height = 48;
  int synthetic_width = 48;
};

struct TrainData {
  ImageSource images;
  int goals = 256;               // goal windows cut from the images
  PatchSpec goal_size{82, 82};
};

struct BenchConfig {
  ImageSource images;
  int patch_count = 100;
  PatchSpec patch_size{82, 82};
  std::vector<StartMode> start_modes{StartMode::kRandom, StartMode::kBlank};
  std::vector<Scheme> schemes{Scheme::kRlOnly, Scheme::kSslOnly, Scheme::kCombined};
  int replicates = 5;
};

// One document describes a whole run. Sub-sections carry no seeds: every
// stream derives from `seed` (see derive_seeds).
struct RunConfig {
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::kCombined;
  int threads = 0;  // 0 keeps the OpenMP default
  std::filesystem::path output_dir = "runs";
  EnvConfig env;
  NetArch arch = NetArch::full_scale();
  InitOptions init;
  BCConfig bc;
  PPOConfig ppo;
  PipelineConfig pipeline;
  RuntimeConfig runtime;
  TrainData train;
  BenchConfig bench;

  // Sets every sub-seed from `seed` and copies arch/init into the pipeline.
  void derive_seeds();
};

// Throws ConfigError on unknown keys, wrong types, sub-section seeds or
// invalid values. Relative paths resolve against base_dir.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

std::vector<Canvas> load_images(const ImageSource& src, std::uint64_t seed);
// Source images of the training goals, and the goal windows cut from them.
std::vector<Canvas> training_images(const RunConfig& cfg);
std::vector<Canvas> training_goals(const RunConfig& cfg);

}  // namespace hindpaint
