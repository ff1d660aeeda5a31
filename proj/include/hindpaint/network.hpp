#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hindpaint {

struct ConvSpec {
  int filters = 64;
  int kernel = 8;
  int stride = 4;
  bool operator==(const ConvSpec&) const = default;
};

// Valid (unpadded) convolutions, each followed by ReLU, then one ReLU dense
// layer and a linear head.
struct NetArch {
  int input_h = 82;
  int input_w = 82;
  int channels = 3;
  std::vector<ConvSpec> convs;
  int hidden = 512;

  // 82x82x3 input; 64 8x8/4, 64 4x4/2, 64 3x3/1; 512 hidden.
  static NetArch full_scale();
  // Small trunk for desk-scale experiments: 16 3x3/1, 16 3x3/2, 16 3x3/1.
  static NetArch compact(int input_side, int filters = 16, int hidden = 64);

  struct Shape {
    int h;
    int w;
    int c;
  };
  // Spatial output of each conv layer, floor((n - k) / s) + 1.
  std::vector<Shape> conv_shapes() const;
  int flat_features() const;
  // Throws InvalidArgument when any layer would have an empty output.
  void validate() const;
  bool operator==(const NetArch&) const = default;
};

struct LayerInfo {
  std::string name;               // "conv1", ..., "fc", "head"
  std::vector<std::int64_t> weight_shape;
  std::size_t weight_offset = 0;
  std::size_t weight_size = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_size = 0;
  int fan_in = 0;
};

// Conv trunk plus linear head over one flat parameter vector.
class ConvNet {
 public:
  ConvNet() = default;
  ConvNet(NetArch arch, int out_dim);

  // Per-call activations kept for backward().
  struct Cache {
    std::vector<double> input;
    std::vector<std::vector<double>> conv_out;  // post-ReLU
    std::vector<double> hidden;                 // post-ReLU
    std::vector<double> output;
    // scratch for backward
    std::vector<double> grad_a;
    std::vector<double> grad_b;
  };

  const NetArch& arch() const { return arch_; }
  int out_dim() const { return out_dim_; }
  std::size_t input_size() const {
    return static_cast<std::size_t>(arch_.input_h) * arch_.input_w * arch_.channels;
  }
  const std::vector<LayerInfo>& layers() const { return layers_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  // Fan-in scaled uniform weights and biases; the head is additionally
  // multiplied by head_scale.
  void init(std::uint64_t seed, double head_scale = 1.0);

  // input: HWC, arch.input_h x arch.input_w x arch.channels.
  std::span<const double> forward(std::span<const float> input, Cache& cache) const;
  std::vector<double> forward(std::span<const float> input) const;

  // Adds d(sum_k d_out[k] * output[k]) / d(params) into d_params. The cache
  // must come from forward() on this network; its scratch buffers are reused.
  void backward(Cache& cache, std::span<const double> d_out,
                std::span<double> d_params) const;

  bool operator==(const ConvNet& other) const {
    return arch_ == other.arch_ && out_dim_ == other.out_dim_ && params_ == other.params_;
  }

 private:
  NetArch arch_;
  int out_dim_ = 0;
  std::vector<LayerInfo> layers_;
  std::vector<double> params_;
};

}  // namespace hindpaint
