#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "hindpaint/archive.hpp"
#include "hindpaint/error.hpp"
#include "hindpaint/policy.hpp"
#include "support.hpp"

using namespace hindpaint;

namespace {

std::vector<float> random_input(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(uniform01(rng));
  return v;
}

Observation constant_obs(Color a, Color b, Color c, Color d, int side) {
  Observation o;
  o.ego_canvas = blank_canvas(side, side, a);
  o.ego_ref = blank_canvas(side, side, b);
  o.global_canvas = blank_canvas(side, side, c);
  o.global_ref = blank_canvas(side, side, d);
  return o;
}

}  // namespace

TEST_CASE("full scale shapes") {
  const NetArch arch = NetArch::full_scale();
  const auto s = arch.conv_shapes();
  REQUIRE(s.size() == 3);
  CHECK(s[0].h == 19);
  CHECK(s[1].h == 8);
  CHECK(s[2].h == 6);
  CHECK(s[2].c == 64);
  CHECK(arch.flat_features() == 2304);
  const ConvNet net(arch, 6);
  CHECK(net.layers()[3].weight_shape == std::vector<std::int64_t>{512, 2304});
}

TEST_CASE("input tiling") {
  const Color a{0.1f, 0.1f, 0.1f}, b{0.2f, 0.2f, 0.2f}, c{0.3f, 0.3f, 0.3f}, d{0.4f, 0.4f, 0.4f};
  const Canvas in = assemble_input(constant_obs(a, b, c, d, 4));
  CHECK(in.height() == 8);
  CHECK(in.pixel(0, 0) == a);
  CHECK(in.pixel(0, 7) == b);
  CHECK(in.pixel(7, 0) == c);
  CHECK(in.pixel(7, 7) == d);

  const Canvas g = random_canvas(41, 41, 1);
  const Observation obs = observe(g, g, {20, 20}, {41, 41});
  const Canvas full = assemble_input(obs);
  CHECK(full.height() == 82);
  CHECK(full.width() == 82);
  for (int r = 0; r < 82; ++r)
    for (int k = 0; k < 41; ++k) CHECK(full.pixel(r, k) == full.pixel(r, k + 41));

  Observation mixed{random_canvas(5, 5, 1), random_canvas(5, 5, 2), random_canvas(5, 5, 3),
                    random_canvas(5, 5, 4), {}};
  const InputTiles t = split_input(assemble_input(mixed));
  CHECK(t.ego_canvas == mixed.ego_canvas);
  CHECK(t.global_canvas == mixed.global_canvas);
  CHECK(t.ego_ref == mixed.ego_ref);
  CHECK(t.global_ref == mixed.global_ref);

  mixed.ego_ref = random_canvas(5, 6, 1);
  CHECK_THROWS_AS(assemble_input(mixed), InvalidArgument);
}

TEST_CASE("zero parameters") {
  const NetParams p(NetArch::compact(16));
  const Canvas in = random_canvas(16, 16, 2);
  const auto d = forward_policy(p, in);
  for (double m : d.mean) CHECK(m == 0.5);
  CHECK(forward_value(p, in) == 0.0);
}

TEST_CASE("forward matches the independent oracle") {
  const NetParams p = init_params(NetArch::compact(16), {3, 1.0, 1.0, -0.5});
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto in = random_input(16 * 16 * 3, s);
    const auto a = p.policy.forward(in);
    const auto b = testing::naive_forward(p.policy, in);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-6);
    const auto va = p.value.forward(in);
    const auto vb = testing::naive_forward(p.value, in);
    CHECK(std::abs(va[0] - vb[0]) <= 1e-6);
    const auto d = forward_policy(p, random_canvas(16, 16, s));
    for (double m : d.mean) {
      CHECK(m > 0.0);
      CHECK(m < 1.0);
    }
  }
}

TEST_CASE("finite difference gradient check") {
  ConvNet net(testing::shrunken_arch(), 6);
  net.init(5, 1.0);
  const auto in = random_input(net.input_size(), 9);
  const auto r = testing::finite_difference_check(net, in, 40, 1);
  CHECK(r.coordinates >= 100);
  for (int n : r.per_layer) CHECK(n > 0);
  CHECK(r.max_rel_error <= 1e-3);
}

TEST_CASE("backward is linear in the upstream gradient") {
  ConvNet net(testing::shrunken_arch(), 6);
  net.init(2, 1.0);
  const auto in = random_input(net.input_size(), 4);
  const std::vector<double> u{0.3, -1.0, 0.5, 0.2, 0.0, -0.7};
  std::vector<double> u3(u);
  for (auto& v : u3) v *= 3.0;
  ConvNet::Cache c1, c2;
  net.forward(in, c1);
  net.forward(in, c2);
  std::vector<double> g1(net.num_params(), 0.0), g3(net.num_params(), 0.0);
  net.backward(c1, u, g1);
  net.backward(c2, u3, g3);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(std::abs(g3[i] - 3.0 * g1[i]) <= 1e-12);

  // With every conv output dead the trunk weights receive no gradient.
  ConvNet dead(testing::shrunken_arch(), 6);
  for (auto& v : dead.params()) v = 0.0;
  const auto& conv1 = dead.layers()[0];
  for (std::size_t i = 0; i < conv1.bias_size; ++i) dead.params()[conv1.bias_offset + i] = -100.0;
  ConvNet::Cache c3;
  dead.forward(in, c3);
  std::vector<double> g(dead.num_params(), 0.0);
  dead.backward(c3, u, g);
  for (std::size_t i = 0; i < conv1.weight_size; ++i) CHECK(g[conv1.weight_offset + i] == 0.0);
}

TEST_CASE("non-finite parameters fail fast") {
  NetParams p = init_params(NetArch::compact(16), {});
  p.policy.params()[0] = std::nan("");
  CHECK_THROWS_AS(require_finite(p), NumericError);
}

TEST_CASE("sampling") {
  ActionVector pre{0.3, -0.2, 1.0, 0.0, -1.5, 0.7};
  ActionVector tiny;
  tiny.fill(kMinLogStd);
  const auto narrow = make_distribution(pre, tiny);
  const auto s = sample_action(narrow, 3);
  const auto m = mean_action(narrow);
  for (int k = 0; k < 6; ++k)
    CHECK(std::abs(s.action.as_array()[k] - m.action.as_array()[k]) <= 0.01);

  ActionVector ls;
  ls.fill(-0.5);
  const auto dist = make_distribution(pre, ls);
  const auto a = sample_action(dist, 11);
  const auto b = sample_action(dist, 11);
  CHECK(a.action == b.action);
  CHECK(a.log_prob == b.log_prob);
  CHECK(a.log_prob == doctest::Approx(log_prob(dist, a.pre_squash)).epsilon(1e-12));

  Rng rng(5);
  std::array<double, 6> sum{};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto x = sample_action(dist, rng);
    for (int k = 0; k < 6; ++k) sum[k] += x.pre_squash[k];
  }
  for (int k = 0; k < 6; ++k) {
    const double sigma = std::exp(-0.5);
    CHECK(std::abs(sum[k] / n - pre[k]) <= 3.0 * sigma / 100.0);
  }
}

TEST_CASE("log density includes the squash correction") {
  ActionVector pre{0.1, 0.2, -0.3, 0.4, 0.0, -0.1};
  ActionVector ls{-0.2, 0.0, -1.0, 0.3, -0.5, 0.1};
  const auto dist = make_distribution(pre, ls);
  const ActionVector u{0.5, -0.4, 0.2, 1.1, 0.0, -0.6};
  double expected = 0.0;
  for (int k = 0; k < 6; ++k) {
    const double sd = std::exp(ls[k]);
    const double z = (u[k] - pre[k]) / sd;
    const double a = 1.0 / (1.0 + std::exp(-u[k]));
    expected += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * M_PI) - std::log(a * (1.0 - a));
  }
  CHECK(log_prob(dist, u) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("checkpoint round trip and integrity") {
  const NetParams p = init_params(NetArch::compact(16), {7, 0.01, 1.0, -0.5});
  const auto path = std::filesystem::temp_directory_path() / "hindpaint_test.hpck";
  save_checkpoint(path, p, {{"note", 1}});
  CHECK(load_checkpoint(path) == p);
  CHECK(checkpoint_extra(path)["note"] == 1);

  auto bytes = read_file_bytes(path);
  bytes[bytes.size() / 2] ^= 0x01;
  write_file_bytes(path, bytes);
  CHECK_THROWS_AS(load_checkpoint(path), IntegrityError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}
