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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mash/bsd.hpp"
#include "mash/image.hpp"
#include "mash/noise.hpp"
#include "mash/shuffle.hpp"

namespace mash {

NetConfig net_config_for(const MashConfig& cfg, int channels);

// Per-iteration record of one training run.
struct TrainingTrace {
  double tau = 0.0;
  std::vector<double> loss;
  std::vector<double> sigma_hat;

  // Mean sigma_hat over the last `window` iterations.
  [[nodiscard]] double converged_sigma(int window) const;
};

struct RunReport {
  std::string input_name;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::optional<NoiseModel> noise;
  std::optional<GapReport> gap;  // absent for fixed-ratio runs
  double tau = 0.0;
  bool shuffle_enabled = false;
  double flat_fraction = 0.0;  // share of pixels shuffled (0 without shuffling)
  TrainingTrace warmup_low;
  TrainingTrace warmup_high;
  TrainingTrace final_run;
  std::optional<MetricReport> metrics;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
  MashConfig config;
};

struct RunResult {
  Image denoised;
  RunReport report;
  // Debug products of the shuffling stage, when it ran.
  std::optional<FlatnessMap> flatness;
  std::optional<Image> shuffled;
};

struct RunOptions {
  std::string name = "input";
  const Image* clean = nullptr;  // enables metrics
  std::optional<NoiseModel> noise;
  // Allows the two warm-ups to train concurrently.
  int threads = 1;
};

// Fixed-ratio blind-spot training for cfg.iterations steps, optionally with
// the shuffled target from iteration cfg.shuffle_start on, then ensemble
// inference at the same ratio. The image is reflect-padded to the network's
// size divisor and the result cropped back.
RunResult run_fixed(const Image& y, double tau, bool shuffle, const MashConfig& cfg,
                    const RunOptions& options = {});

RunResult run_baseline(const Image& y, double tau, const MashConfig& cfg,
                       const RunOptions& options = {});

// Adaptive pipeline: warm-ups at tau_low and tau_high, gap, ratio and
// shuffle decision, final training, ensemble inference.
RunResult run_mash(const Image& y, const MashConfig& cfg, const RunOptions& options = {});

// Only the warm-up stage of run_mash.
struct GapEstimate {
  GapReport gap;
  TrainingTrace low;
  TrainingTrace high;
};
GapEstimate estimate_gap(const Image& y, const MashConfig& cfg, int threads = 1);

// Writes denoised.rawf32, denoised.png, gap.txt (when present), trace.csv,
// report.txt and, when shuffling ran, flatness.png and shuffled.rawf32.
void write_run_outputs(const RunResult& result, const std::filesystem::path& dir);

// Training run at a fixed ratio on an already padded image. Exposed for the
// harness; deterministic in (cfg.seed, tau, iterations, shuffle).
struct TrainedRun {
  DenoiserModel<float> model;
  TrainingTrace trace;
  std::optional<FlatnessMap> flatness;
  std::optional<Image> shuffled;
};
TrainedRun train_fixed(const Image& y_padded, double tau, int iterations, bool shuffle,
                       const MashConfig& cfg);

Image ensemble_output(const DenoiserModel<float>& model, const Image& y_padded, double tau,
                      const MashConfig& cfg);

}  // namespace mash
