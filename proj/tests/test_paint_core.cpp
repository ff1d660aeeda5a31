#include <cmath>

#include "doctest.h"

#include "hindpaint/canvas.hpp"
#include "hindpaint/error.hpp"
#include "hindpaint/perception.hpp"
#include "hindpaint/rng.hpp"

using namespace hindpaint;

namespace {

// Independent disc oracle: a pixel is covered by a stamp at (r0, c0) iff its
// squared distance is within radius^2.
bool in_disc(int r, int c, int r0, int c0, int radius) {
  const int dr = r - r0;
  const int dc = c - c0;
  return dr * dr + dc * dc <= radius * radius;
}

BrushAction random_action(Rng& rng) {
  return {uniform01(rng), uniform01(rng), uniform01(rng),
          uniform01(rng), uniform01(rng), uniform01(rng)};
}

}  // namespace

TEST_CASE("blank canvas fill") {
  const Canvas c = blank_canvas(2, 2, kWhite);
  CHECK(c.height() == 2);
  CHECK(c.width() == 2);
  for (float v : c.data()) CHECK(v == 1.0f);

  const Canvas k = blank_canvas(1, 1, kBlack);
  CHECK(k.pixel(0, 0) == kBlack);

  const Canvas big = blank_canvas(41, 41);
  CHECK(l2_loss(big, big) == 0.0);
}

TEST_CASE("zero dimensions are rejected") {
  CHECK_THROWS_AS(blank_canvas(0, 3), InvalidArgument);
  CHECK_THROWS_AS(blank_canvas(3, 0), InvalidArgument);
  CHECK_THROWS_AS(random_canvas(0, 0, 1), InvalidArgument);
}

TEST_CASE("random canvas is seeded") {
  CHECK(random_canvas(8, 8, 3) == random_canvas(8, 8, 3));
  CHECK(random_canvas(8, 8, 3) != random_canvas(8, 8, 4));
  const Canvas c = random_canvas(4, 4, 0);
  double sum = 0.0;
  for (float v : c.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
    sum += v;
  }
  const double mean = sum / static_cast<double>(c.size());
  CHECK(mean > 0.2);
  CHECK(mean < 0.8);
}

TEST_CASE("stroke model mapping") {
  const StrokeModel m = StrokeModel::for_patch(41, 41, 8);
  CHECK(m.radius_for(0.0) == 1);
  CHECK(m.radius_for(1.0) == 8);
  CHECK(m.radius_for(0.5) == 5);  // round(1 + 3.5)
  CHECK(m.max_offset_h == doctest::Approx(20.5));
}

TEST_CASE("full coverage stroke paints every pixel") {
  const Canvas c = blank_canvas(9, 9);
  StrokeModel m = StrokeModel::for_patch(9, 9, 20);
  const Color col{0.25f, 0.5f, 0.75f};
  const auto out = render_action(c, {4, 4}, {0.5, 0.5, 1.0, col.r, col.g, col.b}, m);
  for (int r = 0; r < 9; ++r)
    for (int k = 0; k < 9; ++k) CHECK(out.canvas.pixel(r, k) == col);
}

TEST_CASE("minimal stamp matches the disc oracle") {
  const Canvas c = blank_canvas(5, 5);
  const StrokeModel m = StrokeModel::for_patch(5, 5, 3);
  const auto out = render_action(c, {2, 2}, {0.5, 0.5, 0.0, 0.0, 0.0, 0.0}, m);
  const int radius = m.radius_for(0.0);
  CHECK(out.brush == BrushState{2, 2});
  for (int r = 0; r < 5; ++r) {
    for (int k = 0; k < 5; ++k) {
      const Color expected = in_disc(r, k, 2, 2, radius) ? kBlack : kWhite;
      CHECK(out.canvas.pixel(r, k) == expected);
    }
  }
}

TEST_CASE("render is deterministic, pure and bounded") {
  Rng rng(11);
  Canvas c = random_canvas(16, 16, 5);
  BrushState b{3, 12};
  const StrokeModel m = StrokeModel::for_patch(8, 8, 3);
  for (int i = 0; i < 200; ++i) {
    BrushAction a = random_action(rng);
    if (i % 7 == 0) a.dh = 3.0;  // out of range components are clamped
    const Canvas before = c;
    const auto r1 = render_action(c, b, a, m);
    const auto r2 = render_action(c, b, a, m);
    CHECK(c == before);
    CHECK(r1.canvas == r2.canvas);
    CHECK(r1.brush == r2.brush);
    CHECK(r1.brush.row >= 0);
    CHECK(r1.brush.row < 16);
    CHECK(r1.brush.col >= 0);
    CHECK(r1.brush.col < 16);
    for (float v : r1.canvas.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    c = r1.canvas;
    b = r1.brush;
  }
}

TEST_CASE("pixels beyond radius plus path length are untouched") {
  Rng rng(23);
  const StrokeModel m = StrokeModel::for_patch(8, 8, 3);
  for (int i = 0; i < 100; ++i) {
    const Canvas c = random_canvas(24, 24, static_cast<std::uint64_t>(i));
    const BrushState b{uniform_int(rng, 0, 23), uniform_int(rng, 0, 23)};
    const BrushAction a = random_action(rng);
    const auto out = render_action(c, b, a, m);
    const double path = std::hypot(out.brush.row - b.row, out.brush.col - b.col);
    const double reach = m.radius_for(a.width) + path;
    for (int r = 0; r < 24; ++r) {
      for (int k = 0; k < 24; ++k) {
        if (std::hypot(r - b.row, k - b.col) > reach + 1e-9) {
          CHECK(out.canvas.pixel(r, k) == c.pixel(r, k));
        }
      }
    }
  }
}

TEST_CASE("in-place render agrees with the pure variant") {
  Canvas c = random_canvas(12, 12, 9);
  const StrokeModel m = StrokeModel::for_patch(6, 6, 2);
  const BrushAction a{0.9, 0.1, 0.4, 0.2, 0.3, 0.4};
  const auto pure = render_action(c, {6, 6}, a, m);
  const BrushState b = render_action_inplace(c, {6, 6}, a, m);
  CHECK(b == pure.brush);
  CHECK(c == pure.canvas);
}

TEST_CASE("clamping") {
  CHECK(clamp_to_canvas({-3, 40}, 10, 20) == BrushState{0, 19});
  const BrushAction a = BrushAction{-1.0, 2.0, std::nan(""), 0.5, 1.5, -0.1}.clamped();
  CHECK(a == BrushAction{0.0, 1.0, 0.0, 0.5, 1.0, 0.0});
}
