// Copyright 2026 The MASH Denoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "mash/image.hpp"
#include "mash/rng.hpp"

namespace mash {

// Encoder-decoder denoiser in the Noise2Noise family.
//
//   encoder  stage 0: conv, conv, pool; stages 1..depth-1: conv, pool
//   bottleneck conv at 1/2^depth resolution
//   decoder  stages depth..2: upsample, concat skip, conv, conv (2*base wide)
//   head     upsample, concat input, conv 64, conv 32, linear conv to C
//
// All convolutions are 3x3 with zero padding and are followed by a leaky
// rectifier except the last one.
struct NetConfig {
  int in_channels = 3;
  int base_width = 48;
  int depth = 5;
  double leaky_slope = 0.1;
  bool reduced = false;

  static constexpr int kHeadWidth1 = 64;
  static constexpr int kHeadWidth2 = 32;

  static NetConfig standard(int channels);
  // CI-scale variant: base width 16, depth 3.
  static NetConfig reduced_variant(int channels);

  [[nodiscard]] int size_divisor() const { return 1 << depth; }
  void validate() const;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int level = 0;  // resolution level: spatial size is H / 2^level
  bool activation = true;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;

  [[nodiscard]] std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * static_cast<std::size_t>(in_channels) * 9;
  }
};

std::vector<ConvSpec> build_topology(const NetConfig& config);
std::size_t parameter_count(const NetConfig& config);

// Upper bound on the input distance (Chebyshev, pixels) that can influence
// one output pixel.
int receptive_field_radius(const NetConfig& config);

template <typename T>
struct DenoiserModel {
  NetConfig config;
  std::vector<ConvSpec> layers;
  std::vector<T> parameters;  // all layers, topology order, weights then bias
};

// Kaiming-normal weights N(0, 2 / (fan_in (1 + slope^2))), zero biases.
template <typename T>
DenoiserModel<T> init_model(const NetConfig& config, Rng& rng);

template <typename T>
DenoiserModel<T> zero_model(const NetConfig& config);

namespace detail {

template <typename T>
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> values;

  void reshape(int c, int h, int w) {
    channels = c;
    height = h;
    width = w;
    values.resize(static_cast<std::size_t>(c) * h * w);
  }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
};

}  // namespace detail

// Reusable buffers for one forward/backward pass. A workspace must not be
// shared between threads; models can be.
template <typename T>
class Workspace {
 public:
  Workspace() = default;

  // Output of the most recent forward pass, in intensity units.
  [[nodiscard]] Image output_image() const;
  // Same, at full internal precision, channel-interleaved like Image.
  [[nodiscard]] std::vector<T> output_values() const;

  // Internal state; layout is private to the network implementation.
  std::vector<detail::Tensor<T>> activations;  // one per conv layer (post-activation)
  std::vector<detail::Tensor<T>> layer_inputs;  // concat/pool results feeding each conv
  std::vector<std::vector<T>> columns;          // im2col per conv layer
  std::vector<std::vector<std::size_t>> argmax; // per pool
  detail::Tensor<T> input;
  std::vector<detail::Tensor<T>> grads;
  std::vector<T> column_grad;
  int in_height = 0;
  int in_width = 0;
};

// Output has the shape of the input. Throws ShapeError when H or W is not a
// multiple of 2^depth or the channel count differs from the config.
template <typename T>
Image forward(const DenoiserModel<T>& model, const Image& input, Workspace<T>& ws);

template <typename T>
Image forward(const DenoiserModel<T>& model, const Image& input);

// Weighted mean squared error sum(weight * (f(input) - target)^2) / (H W C)
// and its exact gradient with respect to every parameter (written to grads,
// resized as needed). Throws NumericalError on a non-finite loss.
template <typename T>
double loss_and_grads(const DenoiserModel<T>& model, const Image& input, const Image& target,
                      const Image& weight, Workspace<T>& ws, std::vector<T>& grads);

template <typename T>
struct LossAndGrads {
  double loss = 0.0;
  std::vector<T> grads;
};

template <typename T>
LossAndGrads<T> loss_and_grads(const DenoiserModel<T>& model, const Image& input,
                               const Image& target, const Image& weight);

// Checkpoint container: "MSHW", config block, parameter tensors in topology
// order. Bitwise lossless.
template <typename T>
void save_checkpoint(const DenoiserModel<T>& model, const std::filesystem::path& path);

template <typename T>
DenoiserModel<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace mash
