#include "hindpaint/network.hpp"

#include <algorithm>
#include <cmath>

#include "hindpaint/error.hpp"
#include "hindpaint/rng.hpp"

namespace hindpaint {

namespace {

inline double relu(double s) { return s < 0.0 ? 0.0 : s; }  // NaN passes through

void conv_forward(const double* in, int in_w, int in_c, const double* weight,
                  const double* bias, const ConvSpec& spec,
                  const NetArch::Shape& out_shape, double* out) {
  const int k = spec.kernel;
  const int row_len = k * in_c;
  for (int oy = 0; oy < out_shape.h; ++oy) {
    for (int ox = 0; ox < out_shape.w; ++ox) {
      double* o = out + (static_cast<std::size_t>(oy) * out_shape.w + ox) * spec.filters;
      for (int f = 0; f < spec.filters; ++f) {
        double s = bias[f];
        const double* wf = weight + static_cast<std::size_t>(f) * k * row_len;
        for (int ky = 0; ky < k; ++ky) {
          const double* irow =
              in + (static_cast<std::size_t>(oy * spec.stride + ky) * in_w + ox * spec.stride) * in_c;
          const double* wrow = wf + ky * row_len;
          for (int t = 0; t < row_len; ++t) s += irow[t] * wrow[t];
        }
        o[f] = relu(s);
      }
    }
  }
}

// d_act: gradient w.r.t. this layer's post-ReLU output. d_in may be null.
void conv_backward(const double* in, int in_w, int in_c, const double* weight,
                   const ConvSpec& spec, const NetArch::Shape& out_shape,
                   const double* act, const double* d_act, double* d_in,
                   double* d_weight, double* d_bias) {
  const int k = spec.kernel;
  const int row_len = k * in_c;
  for (int oy = 0; oy < out_shape.h; ++oy) {
    for (int ox = 0; ox < out_shape.w; ++ox) {
      const std::size_t o = (static_cast<std::size_t>(oy) * out_shape.w + ox) * spec.filters;
      for (int f = 0; f < spec.filters; ++f) {
        if (!(act[o + f] > 0.0)) continue;
        const double g = d_act[o + f];
        d_bias[f] += g;
        const std::size_t wbase = static_cast<std::size_t>(f) * k * row_len;
        for (int ky = 0; ky < k; ++ky) {
          const std::size_t ibase =
              (static_cast<std::size_t>(oy * spec.stride + ky) * in_w + ox * spec.stride) * in_c;
          const double* irow = in + ibase;
          double* dwrow = d_weight + wbase + ky * row_len;
          for (int t = 0; t < row_len; ++t) dwrow[t] += g * irow[t];
          if (d_in != nullptr) {
            const double* wrow = weight + wbase + ky * row_len;
            double* dirow = d_in + ibase;
            for (int t = 0; t < row_len; ++t) dirow[t] += g * wrow[t];
          }
        }
      }
    }
  }
}

}  // namespace

NetArch NetArch::full_scale() {
  NetArch a;
  a.input_h = 82;
  a.input_w = 82;
  a.channels = 3;
  a.convs = {{64, 8, 4}, {64, 4, 2}, {64, 3, 1}};
  a.hidden = 512;
  return a;
}

NetArch NetArch::compact(int input_side, int filters, int hidden) {
  NetArch a;
  a.input_h = input_side;
  a.input_w = input_side;
  a.channels = 3;
  a.convs = {{filters, 3, 1}, {filters, 3, 2}, {filters, 3, 1}};
  a.hidden = hidden;
  return a;
}

std::vector<NetArch::Shape> NetArch::conv_shapes() const {
  std::vector<Shape> shapes;
  int h = input_h;
  int w = input_w;
  for (const auto& c : convs) {
    h = h >= c.kernel ? (h - c.kernel) / c.stride + 1 : 0;
    w = w >= c.kernel ? (w - c.kernel) / c.stride + 1 : 0;
    shapes.push_back({h, w, c.filters});
  }
  return shapes;
}

int NetArch::flat_features() const {
  if (convs.empty()) return input_h * input_w * channels;
  const auto last = conv_shapes().back();
  return last.h * last.w * last.c;
}

void NetArch::validate() const {
  if (input_h < 1 || input_w < 1 || channels < 1 || hidden < 1) {
    throw InvalidArgument("network input, channels and hidden size must be >= 1");
  }
  for (const auto& c : convs) {
    if (c.filters < 1 || c.kernel < 1 || c.stride < 1) {
      throw InvalidArgument("conv filters, kernel and stride must be >= 1");
    }
  }
  for (const auto& s : conv_shapes()) {
    if (s.h < 1 || s.w < 1) {
      throw InvalidArgument("conv stack leaves an empty feature map for input " +
                            std::to_string(input_h) + "x" + std::to_string(input_w));
    }
  }
}

ConvNet::ConvNet(NetArch arch, int out_dim) : arch_(std::move(arch)), out_dim_(out_dim) {
  arch_.validate();
  if (out_dim < 1) throw InvalidArgument("network output dimension must be >= 1");
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::int64_t> shape, int fan_in,
                 std::size_t bias) {
    LayerInfo info;
    info.name = std::move(name);
    info.weight_shape = std::move(shape);
    info.weight_size = 1;
    for (auto d : info.weight_shape) info.weight_size *= static_cast<std::size_t>(d);
    info.weight_offset = offset;
    offset += info.weight_size;
    info.bias_offset = offset;
    info.bias_size = bias;
    offset += bias;
    info.fan_in = fan_in;
    layers_.push_back(std::move(info));
  };
  int in_c = arch_.channels;
  for (std::size_t i = 0; i < arch_.convs.size(); ++i) {
    const auto& c = arch_.convs[i];
    add("conv" + std::to_string(i + 1), {c.filters, c.kernel, c.kernel, in_c},
        c.kernel * c.kernel * in_c, c.filters);
    in_c = c.filters;
  }
  add("fc", {arch_.hidden, arch_.flat_features()}, arch_.flat_features(), arch_.hidden);
  add("head", {out_dim_, arch_.hidden}, arch_.hidden, out_dim_);
  params_.assign(offset, 0.0);
}

void ConvNet::init(std::uint64_t seed, double head_scale) {
  Rng rng(seed);
  for (const auto& layer : layers_) {
    double bound = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    if (layer.name == "head") bound *= head_scale;
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < layer.weight_size; ++i) params_[layer.weight_offset + i] = dist(rng);
    for (std::size_t i = 0; i < layer.bias_size; ++i) params_[layer.bias_offset + i] = dist(rng);
  }
}

std::span<const double> ConvNet::forward(std::span<const float> input, Cache& cache) const {
  if (input.size() != input_size()) {
    throw InvalidArgument("network input has " + std::to_string(input.size()) +
                          " values, expected " + std::to_string(input_size()));
  }
  cache.input.assign(input.begin(), input.end());
  const auto shapes = arch_.conv_shapes();
  cache.conv_out.resize(shapes.size());

  const double* in = cache.input.data();
  int in_w = arch_.input_w;
  int in_c = arch_.channels;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& s = shapes[i];
    const auto& L = layers_[i];
    cache.conv_out[i].resize(static_cast<std::size_t>(s.h) * s.w * s.c);
    conv_forward(in, in_w, in_c, params_.data() + L.weight_offset,
                 params_.data() + L.bias_offset, arch_.convs[i], s, cache.conv_out[i].data());
    in = cache.conv_out[i].data();
    in_w = s.w;
    in_c = s.c;
  }

  const auto& fc = layers_[shapes.size()];
  const auto& head = layers_[shapes.size() + 1];
  const int n_in = arch_.flat_features();
  cache.hidden.resize(arch_.hidden);
  for (int j = 0; j < arch_.hidden; ++j) {
    const double* w = params_.data() + fc.weight_offset + static_cast<std::size_t>(j) * n_in;
    double s = params_[fc.bias_offset + j];
    for (int i = 0; i < n_in; ++i) s += w[i] * in[i];
    cache.hidden[j] = relu(s);
  }
  cache.output.resize(out_dim_);
  for (int k = 0; k < out_dim_; ++k) {
    const double* w = params_.data() + head.weight_offset + static_cast<std::size_t>(k) * arch_.hidden;
    double s = params_[head.bias_offset + k];
    for (int j = 0; j < arch_.hidden; ++j) s += w[j] * cache.hidden[j];
    cache.output[k] = s;
  }
  return cache.output;
}

std::vector<double> ConvNet::forward(std::span<const float> input) const {
  Cache cache;
  const auto out = forward(input, cache);
  return {out.begin(), out.end()};
}

void ConvNet::backward(Cache& cache, std::span<const double> d_out,
                       std::span<double> d_params) const {
  if (d_out.size() != static_cast<std::size_t>(out_dim_) || d_params.size() != params_.size()) {
    throw InvalidArgument("backward: gradient buffer sizes do not match the network");
  }
  const auto shapes = arch_.conv_shapes();
  const std::size_t n_conv = shapes.size();
  const auto& fc = layers_[n_conv];
  const auto& head = layers_[n_conv + 1];
  const int n_in = arch_.flat_features();
  const double* features = n_conv == 0 ? cache.input.data() : cache.conv_out.back().data();

  // head
  std::vector<double> d_hidden(arch_.hidden, 0.0);
  for (int k = 0; k < out_dim_; ++k) {
    const double g = d_out[k];
    if (g == 0.0) continue;
    d_params[head.bias_offset + k] += g;
    const std::size_t row = head.weight_offset + static_cast<std::size_t>(k) * arch_.hidden;
    for (int j = 0; j < arch_.hidden; ++j) {
      d_params[row + j] += g * cache.hidden[j];
      d_hidden[j] += g * params_[row + j];
    }
  }

  // fc
  auto& d_feat = cache.grad_a;
  d_feat.assign(n_in, 0.0);
  for (int j = 0; j < arch_.hidden; ++j) {
    if (!(cache.hidden[j] > 0.0)) continue;
    const double g = d_hidden[j];
    d_params[fc.bias_offset + j] += g;
    const std::size_t row = fc.weight_offset + static_cast<std::size_t>(j) * n_in;
    for (int i = 0; i < n_in; ++i) {
      d_params[row + i] += g * features[i];
      d_feat[i] += g * params_[row + i];
    }
  }

  // convs, last to first
  auto* d_cur = &cache.grad_a;
  auto* d_next = &cache.grad_b;
  for (std::size_t li = n_conv; li-- > 0;) {
    const auto& L = layers_[li];
    const double* in = li == 0 ? cache.input.data() : cache.conv_out[li - 1].data();
    const int in_w = li == 0 ? arch_.input_w : shapes[li - 1].w;
    const int in_c = li == 0 ? arch_.channels : shapes[li - 1].c;
    double* d_in = nullptr;
    if (li > 0) {
      d_next->assign(static_cast<std::size_t>(shapes[li - 1].h) * shapes[li - 1].w * shapes[li - 1].c, 0.0);
      d_in = d_next->data();
    }
    conv_backward(in, in_w, in_c, params_.data() + L.weight_offset, arch_.convs[li], shapes[li],
                  cache.conv_out[li].data(), d_cur->data(), d_in,
                  d_params.data() + L.weight_offset, d_params.data() + L.bias_offset);
    std::swap(d_cur, d_next);
  }
}

}  // namespace hindpaint
