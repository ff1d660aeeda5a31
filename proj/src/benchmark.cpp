#include "hindpaint/benchmark.hpp"

#include <algorithm>
#include <cmath>

#include "hindpaint/error.hpp"
#include "hindpaint/rng.hpp"

namespace hindpaint {

namespace {

Color palette_color(Rng& rng) {
  return {static_cast<float>(0.05 + 0.6 * uniform01(rng)),
          static_cast<float>(0.05 + 0.6 * uniform01(rng)),
          static_cast<float>(0.05 + 0.6 * uniform01(rng))};
}

void fill_rect(Canvas& c, int top, int left, int h, int w, Color col) {
  for (int y = std::max(0, top); y < std::min(c.height(), top + h); ++y) {
    for (int x = std::max(0, left); x < std::min(c.width(), left + w); ++x) c.set_pixel(y, x, col);
  }
}

void fill_disc(Canvas& c, double cy, double cx, double r, Color col) {
  for (int y = 0; y < c.height(); ++y) {
    for (int x = 0; x < c.width(); ++x) {
      const double dy = y - cy;
      const double dx = x - cx;
      if (dy * dy + dx * dx <= r * r) c.set_pixel(y, x, col);
    }
  }
}

}  // namespace

Canvas synthetic_painting(int height, int width, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Color> palette(4);
  for (auto& p : palette) p = palette_color(rng);
  auto pick = [&] { return palette[uniform_int(rng, 0, 3)]; };
  Canvas c(height, width, pick());
  const int side = std::min(height, width);
  const int shapes = uniform_int(rng, 5, 10);
  for (int s = 0; s < shapes; ++s) {
    const Color col = pick();
    switch (uniform_int(rng, 0, 2)) {
      case 0: {
        const int h = std::max(1, static_cast<int>(height * (0.15 + 0.35 * uniform01(rng))));
        const int w = std::max(1, static_cast<int>(width * (0.15 + 0.35 * uniform01(rng))));
        fill_rect(c, uniform_int(rng, -h / 2, height - 1), uniform_int(rng, -w / 2, width - 1), h, w,
                  col);
        break;
      }
      case 1: {
        const double r = side * (0.08 + 0.22 * uniform01(rng));
        fill_disc(c, uniform01(rng) * height, uniform01(rng) * width, r, col);
        break;
      }
      default: {
        const int t = std::max(1, static_cast<int>(side * (0.05 + 0.1 * uniform01(rng))));
        if (uniform01(rng) < 0.5) {
          fill_rect(c, uniform_int(rng, 0, height - 1), 0, t, width, col);
        } else {
          fill_rect(c, 0, uniform_int(rng, 0, width - 1), height, t, col);
        }
        break;
      }
    }
  }
  return c;
}

std::vector<Canvas> synthetic_paintings(int count, int height, int width, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("synthetic image count must be >= 1");
  std::vector<Canvas> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(synthetic_painting(height, width, mix_seed(seed, static_cast<std::uint64_t>(i))));
  }
  return out;
}

std::vector<Window> sample_windows(std::span<const Canvas> sources, int count,
                                   const PatchSpec& size, std::uint64_t seed) {
  if (sources.empty()) throw InvalidArgument("window sampling needs at least one source image");
  if (count < 1) throw InvalidArgument("window count must be >= 1");
  if (size.height < 1 || size.width < 1) throw InvalidArgument("window size must be >= 1");
  for (const auto& s : sources) {
    if (s.height() < size.height || s.width() < size.width) {
      throw InvalidArgument("patch is larger than a source image");
    }
  }
  Rng rng(seed);
  std::vector<Window> out;
  for (int i = 0; i < count; ++i) {
    Window w;
    w.source = uniform_int(rng, 0, static_cast<int>(sources.size()) - 1);
    const Canvas& src = sources[w.source];
    w.top = uniform_int(rng, 0, src.height() - size.height);
    w.left = uniform_int(rng, 0, src.width() - size.width);
    out.push_back(w);
  }
  return out;
}

Canvas crop_window(const Canvas& source, const Window& w, const PatchSpec& size) {
  if (w.top < 0 || w.left < 0 || w.top + size.height > source.height() ||
      w.left + size.width > source.width()) {
    throw InvalidArgument("window lies outside the source image");
  }
  Canvas out(size.height, size.width);
  for (int y = 0; y < size.height; ++y) {
    for (int x = 0; x < size.width; ++x) out.set_pixel(y, x, source.pixel(w.top + y, w.left + x));
  }
  return out;
}

BenchmarkSet make_benchmark(const BenchmarkSpec& spec, std::uint64_t seed) {
  if (spec.start_mode == StartMode::kGiven) {
    throw InvalidArgument("benchmark start mode must be blank or random");
  }
  BenchmarkSet set;
  set.windows = sample_windows(spec.sources, spec.patch_count, spec.patch_size, seed);
  for (std::size_t i = 0; i < set.windows.size(); ++i) {
    BenchmarkPatch p;
    p.goal = crop_window(spec.sources[set.windows[i].source], set.windows[i], spec.patch_size);
    p.start = spec.start_mode == StartMode::kBlank
                  ? blank_canvas(spec.patch_size.height, spec.patch_size.width, spec.fill)
                  : random_canvas(spec.patch_size.height, spec.patch_size.width, mix_seed(seed, i));
    set.patches.push_back(std::move(p));
  }
  return set;
}

}  // namespace hindpaint
