#pragma once
// Independent oracles shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hindpaint/network.hpp"
#include "hindpaint/rng.hpp"

namespace hindpaint::testing {

// Straightforward re-implementation of ConvNet::forward from the layer table:
// weight[f][ky][kx][c] over an HWC input, ReLU after every layer but the head.
inline std::vector<double> naive_forward(const ConvNet& net, std::span<const float> input) {
  const NetArch& arch = net.arch();
  const auto p = net.params();
  std::vector<double> cur(input.begin(), input.end());
  int h = arch.input_h;
  int w = arch.input_w;
  int c = arch.channels;
  for (std::size_t l = 0; l < arch.convs.size(); ++l) {
    const ConvSpec& s = arch.convs[l];
    const LayerInfo& L = net.layers()[l];
    const int oh = (h - s.kernel) / s.stride + 1;
    const int ow = (w - s.kernel) / s.stride + 1;
    std::vector<double> out(static_cast<std::size_t>(oh) * ow * s.filters);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        for (int f = 0; f < s.filters; ++f) {
          double acc = p[L.bias_offset + f];
          for (int ky = 0; ky < s.kernel; ++ky)
            for (int kx = 0; kx < s.kernel; ++kx)
              for (int ch = 0; ch < c; ++ch) {
                const std::size_t wi = ((static_cast<std::size_t>(f) * s.kernel + ky) * s.kernel + kx) * c + ch;
                const std::size_t ii =
                    (static_cast<std::size_t>(y * s.stride + ky) * w + (x * s.stride + kx)) * c + ch;
                acc += p[L.weight_offset + wi] * cur[ii];
              }
          out[(static_cast<std::size_t>(y) * ow + x) * s.filters + f] = std::max(0.0, acc);
        }
    cur = std::move(out);
    h = oh;
    w = ow;
    c = s.filters;
  }
  auto dense = [&](const LayerInfo& L, const std::vector<double>& in, int n_out, bool relu) {
    std::vector<double> out(n_out);
    for (int j = 0; j < n_out; ++j) {
      double acc = p[L.bias_offset + j];
      for (std::size_t i = 0; i < in.size(); ++i) acc += p[L.weight_offset + j * in.size() + i] * in[i];
      out[j] = relu ? std::max(0.0, acc) : acc;
    }
    return out;
  };
  const auto& layers = net.layers();
  const auto hidden = dense(layers[layers.size() - 2], cur, arch.hidden, true);
  return dense(layers.back(), hidden, net.out_dim(), false);
}

// Input 10x10x3, two 3x3 conv layers of 2 filters, 8 hidden units.
inline NetArch shrunken_arch() {
  NetArch a;
  a.input_h = 10;
  a.input_w = 10;
  a.channels = 3;
  a.convs = {{2, 3, 1}, {2, 3, 2}};
  a.hidden = 8;
  return a;
}

struct GradCheck {
  double max_rel_error = 0.0;
  int coordinates = 0;
  std::vector<int> per_layer;  // coordinates probed per layer
};

// Central differences on L(p) = sum_k u_k * out_k(p) with random u, probing
// `per_layer` weight and bias coordinates of every layer.
inline GradCheck finite_difference_check(ConvNet net, std::span<const float> input, int per_layer,
                                         std::uint64_t seed, double eps = 1e-4) {
  Rng rng(seed);
  std::vector<double> u(net.out_dim());
  for (auto& v : u) v = 2.0 * uniform01(rng) - 1.0;
  auto objective = [&](const ConvNet& n) {
    const auto out = n.forward(input);
    double s = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) s += u[k] * out[k];
    return s;
  };
  ConvNet::Cache cache;
  net.forward(input, cache);
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(cache, u, grad);

  GradCheck r;
  for (const LayerInfo& L : net.layers()) {
    int probed = 0;
    for (int i = 0; i < per_layer; ++i) {
      const bool bias = i % 4 == 3;
      const std::size_t idx = bias ? L.bias_offset + rng() % L.bias_size
                                   : L.weight_offset + rng() % L.weight_size;
      const double saved = net.params()[idx];
      net.params()[idx] = saved + eps;
      const double up = objective(net);
      net.params()[idx] = saved - eps;
      const double down = objective(net);
      net.params()[idx] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(numeric), std::abs(grad[idx]), 1e-8});
      r.max_rel_error = std::max(r.max_rel_error, std::abs(numeric - grad[idx]) / denom);
      ++probed;
    }
    r.per_layer.push_back(probed);
    r.coordinates += probed;
  }
  return r;
}

}  // namespace hindpaint::testing
