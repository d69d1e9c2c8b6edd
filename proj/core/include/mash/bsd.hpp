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

#include <cstdint>
#include <string>
#include <vector>

#include "mash/adam.hpp"
#include "mash/image.hpp"
#include "mash/net.hpp"
#include "mash/rng.hpp"

namespace mash {

// Binary blindness mask over H x W x C: 0 = blinded, 1 = visible. Each
// element is blinded independently with probability tau.
class Mask {
 public:
  Mask(int height, int width, int channels, double tau, std::vector<std::uint8_t> bits);

  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] const std::vector<std::uint8_t>& bits() const { return bits_; }
  [[nodiscard]] double zero_fraction() const;

  // y * m: blinded elements set to zero.
  [[nodiscard]] Image apply(const Image& y) const;
  // 1 - m as loss weights.
  [[nodiscard]] Image blinded_weights() const;

 private:
  int height_;
  int width_;
  int channels_;
  double tau_;
  std::vector<std::uint8_t> bits_;
};

Mask sample_mask(int h, int w, int c, double tau, Rng& rng);

// Every tunable of the adaptive-masking pipeline. The presets differ from the
// defaults in base learning rate (1e-3) and, for ci, size.
struct MashConfig {
  double tau_low = 0.2;
  double tau_medium = 0.5;
  double tau_high = 0.8;
  double eps_low = 1.5;   // intensity units
  double eps_high = 2.5;  // intensity units
  int iterations = 800;        // N
  int shuffle_start = 400;     // N1
  int warmup_iterations = 800; // per warm-up run
  int ensemble_size = 10;      // K
  int tile_size = 4;           // s
  double flat_threshold = 5.0; // lambda, intensity units
  int sigma_window = 50;
  std::uint64_t seed = 0;
  bool reduced_net = false;
  AdamSettings adam;  // total_steps is set per run from the iteration count

  static MashConfig desk_preset();
  static MashConfig ci_preset();
  void validate() const;

  friend bool operator==(const MashConfig&, const MashConfig&) = default;
};

struct GapReport {
  double sigma_low = 0.0;
  double sigma_high = 0.0;
  double epsilon = 0.0;
  double tau_optimal = 0.0;
  bool shuffle_enabled = false;
  std::uint64_t seed = 0;

  // key=value lines: sigma_low, sigma_high, epsilon, tau_optimal,
  // shuffle_enabled, seed.
  [[nodiscard]] std::string to_record() const;
  static GapReport from_record(const std::string& text);
};

struct StepStats {
  double loss = 0.0;
  // Noise level estimate from this step's masked forward pass:
  // sqrt(mean((f(m * y) - y)^2)).
  double sigma_hat = 0.0;
};

// Owns a model, its optimizer state, and scratch buffers for repeated
// blind-spot training steps.
class BsdTrainer {
 public:
  BsdTrainer(DenoiserModel<float> model, const AdamSettings& settings);

  // Samples a fresh mask at ratio tau, takes one Adam step on the loss
  // sum((1 - m) (f(y * m) - target)^2) / (H W C), and returns its stats.
  StepStats step(const Image& y, const Image& target, double tau, Rng& mask_rng);

  [[nodiscard]] const DenoiserModel<float>& model() const { return model_; }
  DenoiserModel<float>& model() { return model_; }
  [[nodiscard]] const OptimState<float>& optimizer() const { return opt_; }

 private:
  DenoiserModel<float> model_;
  OptimState<float> opt_;
  Workspace<float> ws_;
  std::vector<float> grads_;
};

// Stateless single step; allocates its own buffers.
double bsd_train_step(DenoiserModel<float>& model, OptimState<float>& opt, const Image& y,
                      const Image& target, double tau, Rng& rng);

// Masked-input residual RMS against y, averaged over n_eval fresh masks.
double estimate_sigma(const DenoiserModel<float>& model, const Image& y, double tau, Rng& rng,
                      int n_eval);

// sqrt(mean((prediction - y)^2)) for a prediction already computed.
double residual_rms(const Image& prediction, const Image& y);

double estimation_gap(double sigma_high, double sigma_low);

struct TauSelection {
  double tau = 0.0;
  bool shuffle_enabled = false;
};

// tau_low for eps <= eps_low, tau_medium for eps_low < eps <= eps_high,
// tau_high (with shuffling) for eps > eps_high.
TauSelection select_tau(double epsilon, const MashConfig& cfg);

// Mean of K forward passes under fresh masks at ratio tau.
Image ensemble_predict(const DenoiserModel<float>& model, const Image& y, double tau, int k,
                       Rng& rng);

}  // namespace mash
