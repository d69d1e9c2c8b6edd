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

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "mash/image.hpp"
#include "mash/rng.hpp"

namespace mash {

enum class DistanceNorm { kEuclidean, kChebyshev };

// Stationary correlated Gaussian noise: variance sigma^2 on the diagonal and
// a triangular falloff beta * (k - d) / k * sigma^2 for pixel distance
// 0 < d <= k.
struct NoiseModel {
  double sigma = 25.0;
  double beta = 0.0;
  double kernel_width = 3.0;
  DistanceNorm norm = DistanceNorm::kEuclidean;

  void validate() const;
};

struct PixelCoord {
  int row = 0;
  int col = 0;
};

double pixel_distance(PixelCoord a, PixelCoord b, DistanceNorm norm);

double covariance_entry(const NoiseModel& model, PixelCoord i, PixelCoord j);

// Covariance at the lag (drow, dcol); covariance_entry depends only on it.
double covariance_at_lag(const NoiseModel& model, int drow, int dcol);

// Row-major pixel ordering: pixel (r, c) has index r * width + c.
struct CovarianceMatrix {
  int height = 0;
  int width = 0;
  Eigen::MatrixXd entries;

  [[nodiscard]] int size() const { return height * width; }
};

inline constexpr int kMaxExactPixels = 4096;

// Assembles the kernel over an h x w grid, then repairs it to the nearest PSD
// matrix by clipping negative eigenvalues and rescales (by congruence with a
// diagonal) so the diagonal is exactly sigma^2.
CovarianceMatrix build_covariance(const NoiseModel& model, int h, int w);

// Dense sampler for oracle-sized grids. Factors the repaired covariance once
// (eigen square root) and draws L z per channel.
class ExactNoiseSampler {
 public:
  ExactNoiseSampler(const NoiseModel& model, int h, int w);

  Image sample(int channels, Rng& rng) const;
  [[nodiscard]] const CovarianceMatrix& covariance() const { return covariance_; }

 private:
  CovarianceMatrix covariance_;
  Eigen::MatrixXd factor_;
};

// Circulant-embedding sampler for arbitrary grid sizes. The kernel is laid on
// a torus of at least 2h x 2w, negative spectral values are clipped, and the
// spectrum is rescaled so the marginal variance stays sigma^2. Each complex
// draw yields two independent fields (real and imaginary parts), used for
// consecutive channels.
class FastNoiseSampler {
 public:
  FastNoiseSampler(const NoiseModel& model, int h, int w);
  ~FastNoiseSampler();
  FastNoiseSampler(const FastNoiseSampler&) = delete;
  FastNoiseSampler& operator=(const FastNoiseSampler&) = delete;

  Image sample(int channels, Rng& rng) const;

  // Covariance of the sampled field at lag (drow, dcol) implied by the
  // repaired spectrum.
  [[nodiscard]] double implied_covariance(int drow, int dcol) const;

 private:
  struct Plan;
  int height_;
  int width_;
  int torus_rows_;
  int torus_cols_;
  std::vector<double> spectral_sqrt_;
  std::vector<double> implied_;
  std::unique_ptr<Plan> plan_;
};

Image sample_noise_exact(const NoiseModel& model, int h, int w, int c, Rng& rng);
Image sample_noise_fast(const NoiseModel& model, int h, int w, int c, Rng& rng);

// clean + fast-sampled noise; never clamped.
Image add_noise(const Image& clean, const NoiseModel& model, Rng& rng);

struct LagCovariance {
  int lag_row = 0;
  int lag_col = 0;
  double covariance = 0.0;
  std::size_t count = 0;
};

// Mean of noise[p] * noise[p + lag] over samples, channels, and all positions
// where both ends are inside the image, for every lag with |lag_row|,
// |lag_col| <= max_lag. Entries are ordered by (lag_row, lag_col).
class AutocovarianceTable {
 public:
  AutocovarianceTable(int max_lag, std::vector<LagCovariance> entries);

  [[nodiscard]] int max_lag() const { return max_lag_; }
  [[nodiscard]] const std::vector<LagCovariance>& entries() const { return entries_; }
  [[nodiscard]] double at(int lag_row, int lag_col) const;

 private:
  int max_lag_;
  std::vector<LagCovariance> entries_;
};

AutocovarianceTable empirical_autocovariance(std::span<const Image> samples, int max_lag);

// Streaming accumulator behind empirical_autocovariance, for sample counts
// too large to hold in memory.
class AutocovarianceAccumulator {
 public:
  explicit AutocovarianceAccumulator(int max_lag);
  void add(const Image& sample);
  [[nodiscard]] std::size_t samples() const { return samples_; }
  [[nodiscard]] AutocovarianceTable table() const;

 private:
  int max_lag_;
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::size_t samples_ = 0;
  std::vector<double> sums_;
  std::vector<std::size_t> counts_;
};

// Full empirical covariance between all pixel pairs of single-channel samples.
class CovarianceAccumulator {
 public:
  CovarianceAccumulator(int h, int w);
  void add(const Image& sample);
  [[nodiscard]] Eigen::MatrixXd covariance() const;
  [[nodiscard]] std::size_t samples() const { return samples_; }

 private:
  int height_;
  int width_;
  std::size_t samples_ = 0;
  Eigen::MatrixXd sum_outer_;
};

}  // namespace mash
