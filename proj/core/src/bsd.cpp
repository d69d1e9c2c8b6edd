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

#include "mash/bsd.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "mash/error.hpp"

namespace mash {

Mask::Mask(int height, int width, int channels, double tau, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), channels_(channels), tau_(tau), bits_(std::move(bits)) {
  if (bits_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw ShapeError("mask size does not match its shape");
  }
}

double Mask::zero_fraction() const {
  std::size_t zeros = 0;
  for (const std::uint8_t b : bits_) zeros += b == 0 ? 1 : 0;
  return static_cast<double>(zeros) / static_cast<double>(bits_.size());
}

Image Mask::apply(const Image& y) const {
  if (y.height() != height_ || y.width() != width_ || y.channels() != channels_) {
    throw ShapeError("mask shape does not match image");
  }
  Image out = y;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] == 0) out[i] = 0.0f;
  }
  return out;
}

Image Mask::blinded_weights() const {
  Image w(height_, width_, channels_);
  for (std::size_t i = 0; i < bits_.size(); ++i) w[i] = bits_[i] == 0 ? 1.0f : 0.0f;
  return w;
}

Mask sample_mask(int h, int w, int c, double tau, Rng& rng) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("masking ratio must lie in [0, 1]");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(h) * w * c);
  std::bernoulli_distribution blinded(tau);
  for (auto& b : bits) b = blinded(rng) ? 0 : 1;
  return Mask(h, w, c, tau, std::move(bits));
}

namespace {
constexpr double kPresetLearningRate = 1e-3;
}  // namespace

MashConfig MashConfig::desk_preset() {
  MashConfig c;
  c.adam.base_lr = kPresetLearningRate;
  return c;
}

MashConfig MashConfig::ci_preset() {
  MashConfig c;
  c.adam.base_lr = kPresetLearningRate;
  c.iterations = 200;
  c.shuffle_start = 100;
  c.warmup_iterations = 200;
  c.reduced_net = true;
  return c;
}

void MashConfig::validate() const {
  if (!(0.0 < tau_low && tau_low < tau_medium && tau_medium < tau_high && tau_high < 1.0)) {
    throw UsageError("require 0 < tau_low < tau_medium < tau_high < 1");
  }
  if (!(0.0 < eps_low && eps_low < eps_high)) throw UsageError("require 0 < eps_low < eps_high");
  if (!(0 < shuffle_start && shuffle_start < iterations)) {
    throw UsageError("require 0 < shuffle_start (N1) < iterations (N)");
  }
  if (warmup_iterations < 1) throw UsageError("warmup_iterations must be >= 1");
  if (ensemble_size < 1) throw UsageError("ensemble_size (K) must be >= 1");
  if (tile_size < 2) throw UsageError("tile_size (s) must be >= 2");
  if (!(flat_threshold > 0.0)) throw UsageError("flat_threshold (lambda) must be > 0");
  if (sigma_window < 1) throw UsageError("sigma_window must be >= 1");
  if (!(adam.base_lr > 0.0) || adam.floor_lr < 0.0) throw UsageError("invalid learning rates");
}

std::string GapReport::to_record() const {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "sigma_low=" << sigma_low << '\n'
      << "sigma_high=" << sigma_high << '\n'
      << "epsilon=" << epsilon << '\n'
      << "tau_optimal=" << tau_optimal << '\n'
      << "shuffle_enabled=" << (shuffle_enabled ? "true" : "false") << '\n'
      << "seed=" << seed << '\n';
  return out.str();
}

GapReport GapReport::from_record(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&kv](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("gap record lacks ") + key);
    return it->second;
  };
  GapReport r;
  r.sigma_low = std::stod(need("sigma_low"));
  r.sigma_high = std::stod(need("sigma_high"));
  r.epsilon = std::stod(need("epsilon"));
  r.tau_optimal = std::stod(need("tau_optimal"));
  r.shuffle_enabled = need("shuffle_enabled") == "true";
  r.seed = std::stoull(need("seed"));
  return r;
}

BsdTrainer::BsdTrainer(DenoiserModel<float> model, const AdamSettings& settings)
    : model_(std::move(model)), opt_(settings, model_.parameters.size()) {}

StepStats BsdTrainer::step(const Image& y, const Image& target, double tau, Rng& mask_rng) {
  const Mask mask = sample_mask(y.height(), y.width(), y.channels(), tau, mask_rng);
  StepStats stats;
  stats.loss = loss_and_grads(model_, mask.apply(y), target, mask.blinded_weights(), ws_, grads_);
  const std::vector<float> out = ws_.output_values();
  double sse = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = static_cast<double>(out[i]) - static_cast<double>(y[i]);
    sse += d * d;
  }
  stats.sigma_hat = std::sqrt(sse / static_cast<double>(out.size()));
  adam_step<float>(model_, opt_, grads_);
  return stats;
}

double bsd_train_step(DenoiserModel<float>& model, OptimState<float>& opt, const Image& y,
                      const Image& target, double tau, Rng& rng) {
  const Mask mask = sample_mask(y.height(), y.width(), y.channels(), tau, rng);
  Workspace<float> ws;
  std::vector<float> grads;
  const double loss = loss_and_grads(model, mask.apply(y), target, mask.blinded_weights(), ws, grads);
  adam_step<float>(model, opt, grads);
  return loss;
}

double residual_rms(const Image& prediction, const Image& y) {
  require_same_shape(prediction, y, "residual_rms");
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = static_cast<double>(prediction[i]) - static_cast<double>(y[i]);
    sse += d * d;
  }
  return std::sqrt(sse / static_cast<double>(y.size()));
}

double estimate_sigma(const DenoiserModel<float>& model, const Image& y, double tau, Rng& rng,
                      int n_eval) {
  if (n_eval < 1) throw UsageError("estimate_sigma needs n_eval >= 1");
  Workspace<float> ws;
  double total = 0.0;
  for (int i = 0; i < n_eval; ++i) {
    const Mask mask = sample_mask(y.height(), y.width(), y.channels(), tau, rng);
    total += residual_rms(forward(model, mask.apply(y), ws), y);
  }
  return total / n_eval;
}

double estimation_gap(double sigma_high, double sigma_low) {
  if (sigma_high < 0.0 || sigma_low < 0.0) throw UsageError("noise level estimates must be >= 0");
  return std::abs(sigma_high - sigma_low);
}

TauSelection select_tau(double epsilon, const MashConfig& cfg) {
  if (!(epsilon >= 0.0)) throw UsageError("estimation gap must be >= 0");
  if (epsilon <= cfg.eps_low) return {cfg.tau_low, false};
  if (epsilon <= cfg.eps_high) return {cfg.tau_medium, false};
  return {cfg.tau_high, true};
}

Image ensemble_predict(const DenoiserModel<float>& model, const Image& y, double tau, int k,
                       Rng& rng) {
  if (k < 1) throw UsageError("ensemble size must be >= 1");
  Workspace<float> ws;
  std::vector<double> sum(y.size(), 0.0);
  for (int p = 0; p < k; ++p) {
    const Mask mask = sample_mask(y.height(), y.width(), y.channels(), tau, rng);
    forward(model, mask.apply(y), ws);
    const std::vector<float> out = ws.output_values();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += out[i];
  }
  Image result(y.height(), y.width(), y.channels());
  for (std::size_t i = 0; i < sum.size(); ++i) result[i] = static_cast<float>(sum[i] / k);
  return result;
}

}  // namespace mash
