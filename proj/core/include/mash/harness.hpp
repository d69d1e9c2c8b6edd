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
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mash/bsd.hpp"
#include "mash/image.hpp"
#include "mash/noise.hpp"

namespace mash {

struct ExperimentImage {
  std::string name;
  Image clean;
};

// Loads each path and center-crops it to crop_size x crop_size.
std::vector<ExperimentImage> load_experiment_images(const std::vector<std::string>& paths,
                                                    int crop_size);

// Synthetic observation of `image` under `noise`. The white-noise stream
// depends only on (seed, image name), so different correlation levels of the
// same image share their underlying draws.
Image make_noisy(const ExperimentImage& image, const NoiseModel& noise, std::uint64_t seed);

// Outcome of one fixed-ratio training run followed by ensemble inference.
struct CellResult {
  bool ok = false;
  std::string error;
  double psnr = 0.0;
  double ssim = 0.0;
  double converged_sigma = 0.0;
  std::vector<double> sigma_trace;
};

// Memo of CellResults keyed by everything that determines them (image
// contents, ratio, shuffle flag, run length, full config). Runs are
// deterministic, so a hit is exactly what a rerun would produce. With a
// directory the memo persists across processes.
class RunCache {
 public:
  explicit RunCache(std::filesystem::path dir = {});

  std::optional<CellResult> find(const std::string& key);
  void store(const std::string& key, const CellResult& result);
  [[nodiscard]] std::size_t hits() const { return hits_; }
  [[nodiscard]] std::size_t misses() const { return misses_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, CellResult> memory_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct CellSpec {
  std::string name;
  const Image* noisy = nullptr;
  const Image* clean = nullptr;
  double tau = 0.5;
  bool shuffle = false;
  int iterations = 800;
};

std::string cell_key(const CellSpec& spec, const MashConfig& cfg);

// Errors inside the run are captured in the result, not thrown.
CellResult run_cell(const CellSpec& spec, const MashConfig& cfg, RunCache* cache);

// Runs fn(0..count-1) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

using ProgressFn = std::function<void(const std::string&)>;

struct SweepSpec {
  std::vector<ExperimentImage> images;
  std::vector<double> tau_grid;
  std::vector<double> beta_grid;
  double sigma = 25.0;
  double kernel_width = 3.0;
  DistanceNorm norm = DistanceNorm::kEuclidean;
  int repetitions = 1;
  std::vector<bool> lps_flags = {false};

  void validate() const;
};

struct SweepRow {
  std::string image;
  double tau = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  bool lps = false;
  CellResult result;
};

struct SweepTable {
  std::vector<SweepRow> rows;  // successful cells, grid order
  std::vector<SweepRow> failures;

  // Columns: image,tau,beta,seed,lps,psnr,ssim,sigma_hat
  [[nodiscard]] std::string to_csv() const;
  [[nodiscard]] std::string failures_csv() const;
};

// One cell per (image, tau, beta, repetition, lps flag); repetition r uses
// seed cfg.seed + r. Rows come back in grid order regardless of threads.
SweepTable sweep(const SweepSpec& spec, const MashConfig& cfg, int threads, RunCache* cache,
                 const ProgressFn& progress = {});

// Ratio maximising PSNR, averaged over images, per (beta, lps) among rows.
double mean_argmax_tau(const SweepTable& table, double beta, bool lps);
double best_psnr_mean(const SweepTable& table, double beta, bool lps);
double mean_psnr(const SweepTable& table, double beta, double tau, bool lps);

struct AuditInput {
  std::string name;
  Image noisy;
  Image clean;
};

// Every ratio attaining the maximum PSNR (exact ties included).
std::vector<double> argmax_ratios(const std::map<double, double>& psnr_by_tau);

struct AuditCell {
  std::string name;
  std::map<double, double> psnr_by_tau;  // tau_low, tau_medium, tau_high
  std::vector<double> best_taus;         // all maximisers (ties included)
  GapReport gap;
  bool success = false;
};

struct AuditReport {
  std::vector<AuditCell> cells;
  double accuracy = 0.0;
  std::size_t successes = 0;

  // Columns: image,psnr_low,psnr_medium,psnr_high,best_tau,sigma_low,
  // sigma_high,epsilon,tau_optimal,success
  [[nodiscard]] std::string to_csv() const;
};

// Per input: baselines at the three candidate ratios, the empirical best
// ratio, and the gap-based selection. Success when the selection is one of
// the maximisers.
AuditReport masking_accuracy_audit(const std::vector<AuditInput>& inputs, const MashConfig& cfg,
                                   int threads, RunCache* cache, const ProgressFn& progress = {});

struct GapCurveSummary {
  std::string image;
  double beta = 0.0;
  GapReport gap;
};

struct GapCurves {
  struct Trace {
    std::string image;
    double beta = 0.0;
    double tau = 0.0;
    std::vector<double> sigma_hat;
  };
  std::vector<Trace> traces;
  std::vector<GapCurveSummary> summaries;

  [[nodiscard]] double mean_epsilon(double beta) const;
  // Columns: image,beta,tau,iteration,sigma_hat
  [[nodiscard]] std::string traces_csv() const;
  // Columns: image,beta,sigma_low,sigma_high,epsilon,tau_optimal,shuffle_enabled
  [[nodiscard]] std::string summary_csv() const;
};

// Warm-up runs at tau_low and tau_high for every (image, beta).
GapCurves gap_curves(const std::vector<ExperimentImage>& images, const std::vector<double>& betas,
                     const NoiseModel& base_noise, const MashConfig& cfg, int threads,
                     RunCache* cache, const ProgressFn& progress = {});

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mash
