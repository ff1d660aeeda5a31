#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hindpaint/canvas.hpp"
#include "hindpaint/env.hpp"
#include "hindpaint/perception.hpp"
#include "hindpaint/reproduce.hpp"

namespace hindpaint {

// Flat-colored rectangles, discs and bars over a background, drawn from a
// small per-image palette of mid to dark tones. Deterministic in the seed.
Canvas synthetic_painting(int height, int width, std::uint64_t seed);

std::vector<Canvas> synthetic_paintings(int count, int height, int width, std::uint64_t seed);

struct Window {
  std::int64_t source = 0;
  int top = 0;
  int left = 0;
  bool operator==(const Window&) const = default;
};

// `count` uniformly placed windows of the given size. Throws InvalidArgument
// when a source is smaller than the window.
std::vector<Window> sample_windows(std::span<const Canvas> sources, int count,
                                   const PatchSpec& size, std::uint64_t seed);
Canvas crop_window(const Canvas& source, const Window& w, const PatchSpec& size);

struct BenchmarkSpec {
  std::vector<Canvas> sources;
  int patch_count = 100;
  PatchSpec patch_size{41, 41};
  StartMode start_mode = StartMode::kBlank;  // kBlank or kRandom
  Color fill = kWhite;
};

struct BenchmarkSet {
  std::vector<BenchmarkPatch> patches;
  std::vector<Window> windows;
};

// Patch i is window i; random starts use random_canvas(mix_seed(seed, i)).
BenchmarkSet make_benchmark(const BenchmarkSpec& spec, std::uint64_t seed);

}  // namespace hindpaint
