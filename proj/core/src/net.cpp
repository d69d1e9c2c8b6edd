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

#include "mash/net.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "mash/error.hpp"

namespace mash {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using detail::Tensor;

// Layer indices within the fixed topology.
struct LayerIndex {
  int depth;
  // Conv consuming pool output p_level; encoder(depth) is the bottleneck.
  [[nodiscard]] int encoder(int level) const { return 1 + level; }
  [[nodiscard]] int bottleneck() const { return depth + 1; }
  [[nodiscard]] int decoder_a(int level) const { return depth + 2 + 2 * (depth - level); }
  [[nodiscard]] int decoder_b(int level) const { return decoder_a(level) + 1; }
  [[nodiscard]] int head1() const { return 3 * depth; }
  [[nodiscard]] int head2() const { return 3 * depth + 1; }
  [[nodiscard]] int output() const { return 3 * depth + 2; }
  [[nodiscard]] int count() const { return 3 * depth + 3; }
};

template <typename T>
void im2col(const Tensor<T>& in, std::vector<T>& col) {
  const int h = in.height;
  const int w = in.width;
  const std::size_t plane = in.plane();
  col.resize(static_cast<std::size_t>(in.channels) * 9 * plane);
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.values.data() + c * plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = col.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * plane;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          T* row = dst + static_cast<std::size_t>(y) * w;
          if (sy < 0 || sy >= h) {
            std::fill(row, row + w, T(0));
            continue;
          }
          const T* srow = src + static_cast<std::size_t>(sy) * w;
          if (kx == 1) {
            std::copy(srow, srow + w, row);
          } else if (kx == 0) {
            row[0] = T(0);
            std::copy(srow, srow + w - 1, row + 1);
          } else {
            std::copy(srow + 1, srow + w, row);
            row[w - 1] = T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const std::vector<T>& col, Tensor<T>& out) {
  const int h = out.height;
  const int w = out.width;
  const std::size_t plane = out.plane();
  for (int c = 0; c < out.channels; ++c) {
    T* dst = out.values.data() + c * plane;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = col.data() + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * plane;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const T* row = src + static_cast<std::size_t>(y) * w;
          T* drow = dst + static_cast<std::size_t>(sy) * w;
          const int x0 = kx == 0 ? 1 : 0;
          const int x1 = kx == 2 ? w - 1 : w;
          const int shift = kx - 1;
          for (int x = x0; x < x1; ++x) drow[x + shift] += row[x];
        }
      }
    }
  }
}

template <typename T>
void conv_forward(const ConvSpec& spec, const T* params, const Tensor<T>& in,
                  std::vector<T>& col, Tensor<T>& out, T slope) {
  im2col(in, col);
  const auto plane = static_cast<Eigen::Index>(in.plane());
  out.reshape(spec.out_channels, in.height, in.width);
  Eigen::Map<const RowMatrix<T>> weights(params + spec.weight_offset, spec.out_channels,
                                         spec.in_channels * 9);
  Eigen::Map<const RowMatrix<T>> columns(col.data(), spec.in_channels * 9, plane);
  Eigen::Map<RowMatrix<T>> result(out.values.data(), spec.out_channels, plane);
  result.noalias() = weights * columns;
  Eigen::Map<const Vector<T>> bias(params + spec.bias_offset, spec.out_channels);
  result.colwise() += bias;
  if (spec.activation) {
    for (T& v : out.values) v = v > T(0) ? v : v * slope;
  }
}

// grad holds dL/d(output); it is converted in place to dL/d(pre-activation).
template <typename T>
void conv_backward(const ConvSpec& spec, const T* params, const std::vector<T>& col,
                   const Tensor<T>& activation, Tensor<T>& grad, T slope, T* param_grads,
                   std::vector<T>& col_grad, Tensor<T>* input_grad) {
  if (spec.activation) {
    for (std::size_t i = 0; i < grad.values.size(); ++i) {
      if (!(activation.values[i] > T(0))) grad.values[i] *= slope;
    }
  }
  const auto plane = static_cast<Eigen::Index>(grad.plane());
  const auto fan = static_cast<Eigen::Index>(spec.in_channels) * 9;
  Eigen::Map<const RowMatrix<T>> dz(grad.values.data(), spec.out_channels, plane);
  Eigen::Map<const RowMatrix<T>> columns(col.data(), fan, plane);
  Eigen::Map<RowMatrix<T>> dw(param_grads + spec.weight_offset, spec.out_channels, fan);
  dw.noalias() += dz * columns.transpose();
  // Plain loop: Eigen's vectorised reductions peel by address, which makes the
  // summation order depend on allocation alignment.
  for (int o = 0; o < spec.out_channels; ++o) {
    const T* row = grad.values.data() + static_cast<std::size_t>(o) * grad.plane();
    T sum = T(0);
    for (Eigen::Index p = 0; p < plane; ++p) sum += row[p];
    param_grads[spec.bias_offset + o] += sum;
  }
  if (input_grad != nullptr) {
    Eigen::Map<const RowMatrix<T>> weights(params + spec.weight_offset, spec.out_channels, fan);
    col_grad.resize(static_cast<std::size_t>(fan) * plane);
    Eigen::Map<RowMatrix<T>> dcol(col_grad.data(), fan, plane);
    dcol.noalias() = weights.transpose() * dz;
    col2im_add(col_grad, *input_grad);
  }
}

template <typename T>
void maxpool_forward(const Tensor<T>& in, Tensor<T>& out, std::vector<std::size_t>& argmax) {
  const int oh = in.height / 2;
  const int ow = in.width / 2;
  out.reshape(in.channels, oh, ow);
  argmax.resize(out.values.size());
  const std::size_t ip = in.plane();
  const std::size_t op = out.plane();
  for (int c = 0; c < in.channels; ++c) {
    const T* src = in.values.data() + c * ip;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        std::size_t best = static_cast<std::size_t>(2 * y) * in.width + 2 * x;
        const std::size_t cands[3] = {best + 1, best + in.width, best + in.width + 1};
        for (std::size_t cand : cands) {
          if (src[cand] > src[best]) best = cand;
        }
        const std::size_t o = c * op + static_cast<std::size_t>(y) * ow + x;
        out.values[o] = src[best];
        argmax[o] = c * ip + best;
      }
    }
  }
}

template <typename T>
void maxpool_backward(const Tensor<T>& grad_out, const std::vector<std::size_t>& argmax,
                      Tensor<T>& grad_in) {
  for (std::size_t o = 0; o < grad_out.values.size(); ++o) {
    grad_in.values[argmax[o]] += grad_out.values[o];
  }
}

// cat = [upsample2x(low); skip] along channels.
template <typename T>
void upsample_concat(const Tensor<T>& low, const Tensor<T>& skip, Tensor<T>& cat) {
  const int h = skip.height;
  const int w = skip.width;
  cat.reshape(low.channels + skip.channels, h, w);
  const std::size_t plane = cat.plane();
  for (int c = 0; c < low.channels; ++c) {
    const T* src = low.values.data() + c * low.plane();
    T* dst = cat.values.data() + c * plane;
    for (int y = 0; y < h; ++y) {
      const T* srow = src + static_cast<std::size_t>(y / 2) * low.width;
      T* drow = dst + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) drow[x] = srow[x / 2];
    }
  }
  std::copy(skip.values.begin(), skip.values.end(),
            cat.values.begin() + static_cast<std::ptrdiff_t>(low.channels * plane));
}

// Splits dL/d(cat) into the low-resolution branch (summing 2x2 blocks) and
// adds the skip part into grad_skip when given.
template <typename T>
void upsample_concat_backward(const Tensor<T>& grad_cat, Tensor<T>& grad_low,
                              Tensor<T>* grad_skip) {
  const int h = grad_cat.height;
  const int w = grad_cat.width;
  const std::size_t plane = grad_cat.plane();
  std::fill(grad_low.values.begin(), grad_low.values.end(), T(0));
  for (int c = 0; c < grad_low.channels; ++c) {
    const T* src = grad_cat.values.data() + c * plane;
    T* dst = grad_low.values.data() + c * grad_low.plane();
    for (int y = 0; y < h; ++y) {
      T* drow = dst + static_cast<std::size_t>(y / 2) * grad_low.width;
      const T* srow = src + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) drow[x / 2] += srow[x];
    }
  }
  if (grad_skip != nullptr) {
    const T* src = grad_cat.values.data() + grad_low.channels * plane;
    for (std::size_t i = 0; i < grad_skip->values.size(); ++i) grad_skip->values[i] += src[i];
  }
}

template <typename T>
void zero_like(Tensor<T>& t, const Tensor<T>& shape) {
  t.reshape(shape.channels, shape.height, shape.width);
  std::fill(t.values.begin(), t.values.end(), T(0));
}

void check_input(const NetConfig& config, const Image& input) {
  if (input.channels() != config.in_channels) {
    throw ShapeError("network expects " + std::to_string(config.in_channels) +
                     " channels, got " + std::to_string(input.channels()));
  }
  const int d = config.size_divisor();
  if (input.height() % d != 0 || input.width() % d != 0) {
    throw ShapeError("network input " + std::to_string(input.height()) + "x" +
                     std::to_string(input.width()) + " is not divisible by " + std::to_string(d));
  }
}

// Forward pass; caches everything backward needs. Pool outputs are stored in
// ws.layer_inputs at the index of the conv that consumes them, concatenations
// likewise.
template <typename T>
void run_forward(const DenoiserModel<T>& model, const Image& input, Workspace<T>& ws) {
  const NetConfig& cfg = model.config;
  check_input(cfg, input);
  const LayerIndex idx{cfg.depth};
  const int n_layers = idx.count();
  const T slope = static_cast<T>(cfg.leaky_slope);
  const T* params = model.parameters.data();
  ws.activations.resize(n_layers);
  ws.layer_inputs.resize(n_layers);
  ws.columns.resize(n_layers);
  ws.argmax.resize(cfg.depth);
  ws.in_height = input.height();
  ws.in_width = input.width();

  const int h = input.height();
  const int w = input.width();
  const int c = input.channels();
  ws.input.reshape(c, h, w);
  const T scale = T(1) / T(255);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        ws.input.values[static_cast<std::size_t>(ch) * h * w + static_cast<std::size_t>(y) * w + x] =
            static_cast<T>(input.at(y, x, ch)) * scale;
      }
    }
  }

  const auto& L = model.layers;
  auto& act = ws.activations;
  conv_forward(L[0], params, ws.input, ws.columns[0], act[0], slope);
  conv_forward(L[1], params, act[0], ws.columns[1], act[1], slope);
  // Pool output p_l feeds layer encoder(l); encoder(depth) is the bottleneck.
  maxpool_forward(act[1], ws.layer_inputs[idx.encoder(1)], ws.argmax[0]);
  for (int level = 1; level < cfg.depth; ++level) {
    const int li = idx.encoder(level);
    conv_forward(L[li], params, ws.layer_inputs[li], ws.columns[li], act[li], slope);
    maxpool_forward(act[li], ws.layer_inputs[idx.encoder(level + 1)], ws.argmax[level]);
  }
  const int bn = idx.bottleneck();
  conv_forward(L[bn], params, ws.layer_inputs[bn], ws.columns[bn], act[bn], slope);

  const Tensor<T>* low = &act[bn];
  for (int level = cfg.depth; level >= 2; --level) {
    // Skip: the pool output at resolution 1/2^(level-1).
    const int skip_owner = idx.encoder(level - 1);
    const int a = idx.decoder_a(level);
    const int b = idx.decoder_b(level);
    upsample_concat(*low, ws.layer_inputs[skip_owner], ws.layer_inputs[a]);
    conv_forward(L[a], params, ws.layer_inputs[a], ws.columns[a], act[a], slope);
    conv_forward(L[b], params, act[a], ws.columns[b], act[b], slope);
    low = &act[b];
  }
  const int h1 = idx.head1();
  upsample_concat(*low, ws.input, ws.layer_inputs[h1]);
  conv_forward(L[h1], params, ws.layer_inputs[h1], ws.columns[h1], act[h1], slope);
  const int h2 = idx.head2();
  conv_forward(L[h2], params, act[h1], ws.columns[h2], act[h2], slope);
  const int out = idx.output();
  conv_forward(L[out], params, act[h2], ws.columns[out], act[out], slope);
}

template <typename T>
void run_backward(const DenoiserModel<T>& model, Workspace<T>& ws, Tensor<T> grad_output,
                  std::vector<T>& grads) {
  const NetConfig& cfg = model.config;
  const LayerIndex idx{cfg.depth};
  const T slope = static_cast<T>(cfg.leaky_slope);
  const T* params = model.parameters.data();
  T* pg = grads.data();
  const auto& L = model.layers;
  auto& act = ws.activations;
  auto& g = ws.grads;
  g.resize(idx.count());

  // Gradients w.r.t. each pool output live at the index of its consumer.
  for (int level = 1; level <= cfg.depth; ++level) {
    zero_like(g[idx.encoder(level)], ws.layer_inputs[idx.encoder(level)]);
  }

  Tensor<T> dz = std::move(grad_output);
  Tensor<T> dcat;

  const int out = idx.output();
  const int h2 = idx.head2();
  const int h1 = idx.head1();
  Tensor<T> dprev;
  zero_like(dprev, act[h2]);
  conv_backward(L[out], params, ws.columns[out], act[out], dz, slope, pg, ws.column_grad, &dprev);
  dz = std::move(dprev);
  zero_like(dprev, act[h1]);
  conv_backward(L[h2], params, ws.columns[h2], act[h2], dz, slope, pg, ws.column_grad, &dprev);
  dz = std::move(dprev);
  zero_like(dcat, ws.layer_inputs[h1]);
  conv_backward(L[h1], params, ws.columns[h1], act[h1], dz, slope, pg, ws.column_grad, &dcat);

  const Tensor<T>* low_shape =
      cfg.depth >= 2 ? &act[idx.decoder_b(2)] : &act[idx.bottleneck()];
  Tensor<T> dlow;
  dlow.reshape(low_shape->channels, low_shape->height, low_shape->width);
  upsample_concat_backward(dcat, dlow, static_cast<Tensor<T>*>(nullptr));

  for (int level = 2; level <= cfg.depth; ++level) {
    const int a = idx.decoder_a(level);
    const int b = idx.decoder_b(level);
    dz = std::move(dlow);
    zero_like(dprev, act[a]);
    conv_backward(L[b], params, ws.columns[b], act[b], dz, slope, pg, ws.column_grad, &dprev);
    dz = std::move(dprev);
    zero_like(dcat, ws.layer_inputs[a]);
    conv_backward(L[a], params, ws.columns[a], act[a], dz, slope, pg, ws.column_grad, &dcat);
    const Tensor<T>& low = level < cfg.depth ? act[idx.decoder_b(level + 1)] : act[idx.bottleneck()];
    dlow.reshape(low.channels, low.height, low.width);
    const int skip_owner = idx.encoder(level - 1);
    upsample_concat_backward(dcat, dlow, &g[skip_owner]);
  }

  const int bn = idx.bottleneck();
  dz = std::move(dlow);
  conv_backward(L[bn], params, ws.columns[bn], act[bn], dz, slope, pg, ws.column_grad, &g[bn]);

  // g[consumer of p_{level+1}] now holds dL/dp_{level+1}.
  for (int level = cfg.depth - 1; level >= 1; --level) {
    const int li = idx.encoder(level);
    zero_like(dz, act[li]);
    maxpool_backward(g[idx.encoder(level + 1)], ws.argmax[level], dz);
    conv_backward(L[li], params, ws.columns[li], act[li], dz, slope, pg, ws.column_grad, &g[li]);
  }
  zero_like(dz, act[1]);
  maxpool_backward(g[idx.encoder(1)], ws.argmax[0], dz);
  zero_like(dprev, act[0]);
  conv_backward(L[1], params, ws.columns[1], act[1], dz, slope, pg, ws.column_grad, &dprev);
  dz = std::move(dprev);
  conv_backward(L[0], params, ws.columns[0], act[0], dz, slope, pg, ws.column_grad,
                static_cast<Tensor<T>*>(nullptr));
}

}  // namespace

NetConfig NetConfig::standard(int channels) {
  NetConfig c;
  c.in_channels = channels;
  return c;
}

NetConfig NetConfig::reduced_variant(int channels) {
  NetConfig c;
  c.in_channels = channels;
  c.base_width = 16;
  c.depth = 3;
  c.reduced = true;
  return c;
}

void NetConfig::validate() const {
  if (in_channels != 1 && in_channels != 3) throw UsageError("net in_channels must be 1 or 3");
  if (base_width < 1) throw UsageError("net base_width must be >= 1");
  if (depth < 1 || depth > 8) throw UsageError("net depth must be in [1, 8]");
  if (!(leaky_slope > 0.0) || !(leaky_slope < 1.0)) {
    throw UsageError("net leaky_slope must be in (0, 1)");
  }
}

std::vector<ConvSpec> build_topology(const NetConfig& config) {
  config.validate();
  const int b = config.base_width;
  const int c = config.in_channels;
  const int d = config.depth;
  std::vector<ConvSpec> layers;
  auto add = [&layers](int in, int out, int level, bool act) {
    ConvSpec s;
    s.in_channels = in;
    s.out_channels = out;
    s.level = level;
    s.activation = act;
    layers.push_back(s);
  };
  add(c, b, 0, true);
  add(b, b, 0, true);
  for (int level = 1; level < d; ++level) add(b, b, level, true);
  add(b, b, d, true);
  for (int level = d; level >= 2; --level) {
    const int low = level == d ? b : 2 * b;
    add(low + b, 2 * b, level - 1, true);
    add(2 * b, 2 * b, level - 1, true);
  }
  const int low = d >= 2 ? 2 * b : b;
  add(low + c, NetConfig::kHeadWidth1, 0, true);
  add(NetConfig::kHeadWidth1, NetConfig::kHeadWidth2, 0, true);
  add(NetConfig::kHeadWidth2, c, 0, false);

  std::size_t offset = 0;
  for (ConvSpec& s : layers) {
    s.weight_offset = offset;
    offset += s.weight_count();
    s.bias_offset = offset;
    offset += static_cast<std::size_t>(s.out_channels);
  }
  return layers;
}

std::size_t parameter_count(const NetConfig& config) {
  const auto layers = build_topology(config);
  return layers.back().bias_offset + static_cast<std::size_t>(layers.back().out_channels);
}

int receptive_field_radius(const NetConfig& config) {
  int r = 0;
  r += 2;  // two full-resolution encoder convs
  for (int level = 0; level < config.depth; ++level) r += 1 << level;  // pools
  for (int level = 1; level < config.depth; ++level) r += 1 << level;  // encoder convs
  r += 1 << config.depth;                                              // bottleneck
  for (int level = config.depth; level >= 1; --level) r += 1 << level;  // upsampling
  for (int level = config.depth; level >= 2; --level) r += 2 * (1 << (level - 1));
  r += 3;  // head
  return r;
}

template <typename T>
DenoiserModel<T> zero_model(const NetConfig& config) {
  DenoiserModel<T> m;
  m.config = config;
  m.layers = build_topology(config);
  m.parameters.assign(parameter_count(config), T(0));
  return m;
}

template <typename T>
DenoiserModel<T> init_model(const NetConfig& config, Rng& rng) {
  DenoiserModel<T> m = zero_model<T>(config);
  const double gain = 2.0 / (1.0 + config.leaky_slope * config.leaky_slope);
  for (const ConvSpec& s : m.layers) {
    const double stddev = std::sqrt(gain / (static_cast<double>(s.in_channels) * 9.0));
    std::normal_distribution<double> normal(0.0, stddev);
    for (std::size_t i = 0; i < s.weight_count(); ++i) {
      m.parameters[s.weight_offset + i] = static_cast<T>(normal(rng));
    }
  }
  return m;
}

template <typename T>
std::vector<T> Workspace<T>::output_values() const {
  if (activations.empty()) throw UsageError("workspace holds no forward pass");
  const Tensor<T>& out = activations.back();
  std::vector<T> values(out.values.size());
  const std::size_t plane = out.plane();
  for (std::size_t p = 0; p < plane; ++p) {
    for (int ch = 0; ch < out.channels; ++ch) {
      values[p * out.channels + ch] = out.values[ch * plane + p] * T(255);
    }
  }
  return values;
}

template <typename T>
Image Workspace<T>::output_image() const {
  const std::vector<T> values = output_values();
  const Tensor<T>& out = activations.back();
  std::vector<float> data(values.begin(), values.end());
  return Image(out.height, out.width, out.channels, std::move(data));
}

template <typename T>
Image forward(const DenoiserModel<T>& model, const Image& input, Workspace<T>& ws) {
  run_forward(model, input, ws);
  return ws.output_image();
}

template <typename T>
Image forward(const DenoiserModel<T>& model, const Image& input) {
  Workspace<T> ws;
  return forward(model, input, ws);
}

template <typename T>
double loss_and_grads(const DenoiserModel<T>& model, const Image& input, const Image& target,
                      const Image& weight, Workspace<T>& ws, std::vector<T>& grads) {
  require_same_shape(input, target, "loss_and_grads target");
  require_same_shape(input, weight, "loss_and_grads weight");
  run_forward(model, input, ws);
  const Tensor<T>& out = ws.activations.back();
  const int h = out.height;
  const int w = out.width;
  const int c = out.channels;
  const std::size_t plane = out.plane();
  const double n = static_cast<double>(input.size());

  Tensor<T> grad_out;
  grad_out.reshape(c, h, w);
  double loss = 0.0;
  const T coeff = static_cast<T>(2.0 * 255.0 / n);
  for (std::size_t p = 0; p < plane; ++p) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t img_i = p * c + ch;
      const std::size_t t_i = ch * plane + p;
      const T wgt = static_cast<T>(weight[img_i]);
      const T residual = out.values[t_i] * T(255) - static_cast<T>(target[img_i]);
      loss += static_cast<double>(wgt) * static_cast<double>(residual) * static_cast<double>(residual);
      grad_out.values[t_i] = coeff * wgt * residual;
    }
  }
  loss /= n;
  if (!std::isfinite(loss)) throw NumericalError("non-finite training loss (divergence)");

  grads.assign(model.parameters.size(), T(0));
  run_backward(model, ws, std::move(grad_out), grads);
  return loss;
}

template <typename T>
LossAndGrads<T> loss_and_grads(const DenoiserModel<T>& model, const Image& input,
                               const Image& target, const Image& weight) {
  Workspace<T> ws;
  LossAndGrads<T> r;
  r.loss = loss_and_grads(model, input, target, weight, ws, r.grads);
  return r;
}

#define MASH_INSTANTIATE_NET(T)                                                               \
  template DenoiserModel<T> init_model<T>(const NetConfig&, Rng&);                            \
  template DenoiserModel<T> zero_model<T>(const NetConfig&);                                  \
  template class Workspace<T>;                                                                \
  template Image forward<T>(const DenoiserModel<T>&, const Image&, Workspace<T>&);            \
  template Image forward<T>(const DenoiserModel<T>&, const Image&);                           \
  template double loss_and_grads<T>(const DenoiserModel<T>&, const Image&, const Image&,      \
                                    const Image&, Workspace<T>&, std::vector<T>&);            \
  template LossAndGrads<T> loss_and_grads<T>(const DenoiserModel<T>&, const Image&,           \
                                             const Image&, const Image&);

MASH_INSTANTIATE_NET(float)
MASH_INSTANTIATE_NET(double)

#undef MASH_INSTANTIATE_NET

}  // namespace mash
