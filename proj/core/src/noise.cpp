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

#include "mash/noise.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "mash/error.hpp"

namespace mash {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct RepairedCovariance {
  CovarianceMatrix matrix;
  Eigen::MatrixXd factor;  // factor * factor^T == matrix.entries
};

void require_grid(int h, int w) {
  if (h <= 0 || w <= 0) throw ShapeError("noise grid dimensions must be positive");
}

RepairedCovariance repair(const NoiseModel& model, int h, int w) {
  model.validate();
  require_grid(h, w);
  const int n = h * w;
  if (n > kMaxExactPixels) {
    throw UsageError("exact covariance path supports at most " + std::to_string(kMaxExactPixels) +
                     " pixels, got " + std::to_string(n));
  }
  Eigen::MatrixXd raw(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const double v = covariance_entry(model, {a / w, a % w}, {b / w, b % w});
      raw(a, b) = v;
      raw(b, a) = v;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(raw);
  if (solver.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd factor = solver.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd repaired = factor * factor.transpose();

  // Congruence with a diagonal keeps PSD and restores the sigma^2 diagonal.
  const double var = model.sigma * model.sigma;
  Eigen::VectorXd scale(n);
  for (int a = 0; a < n; ++a) {
    if (!(repaired(a, a) > 0.0)) throw NumericalError("repaired covariance has a zero diagonal");
    scale(a) = std::sqrt(var / repaired(a, a));
  }
  factor = scale.asDiagonal() * factor;
  repaired = scale.asDiagonal() * repaired * scale.asDiagonal();
  repaired = 0.5 * (repaired + repaired.transpose());
  for (int a = 0; a < n; ++a) repaired(a, a) = var;

  RepairedCovariance out;
  out.matrix.height = h;
  out.matrix.width = w;
  out.matrix.entries = std::move(repaired);
  out.factor = std::move(factor);
  return out;
}

}  // namespace

void NoiseModel::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw UsageError("noise sigma must be > 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw UsageError("noise beta must be >= 0");
  if (!(kernel_width >= 1.0) || !std::isfinite(kernel_width)) {
    throw UsageError("noise kernel width must be >= 1");
  }
}

double pixel_distance(PixelCoord a, PixelCoord b, DistanceNorm norm) {
  const double dr = std::abs(a.row - b.row);
  const double dc = std::abs(a.col - b.col);
  return norm == DistanceNorm::kChebyshev ? std::max(dr, dc) : std::hypot(dr, dc);
}

double covariance_entry(const NoiseModel& model, PixelCoord i, PixelCoord j) {
  const double var = model.sigma * model.sigma;
  if (i.row == j.row && i.col == j.col) return var;
  const double d = pixel_distance(i, j, model.norm);
  if (d <= model.kernel_width) {
    return model.beta * (model.kernel_width - d) / model.kernel_width * var;
  }
  return 0.0;
}

double covariance_at_lag(const NoiseModel& model, int drow, int dcol) {
  return covariance_entry(model, {0, 0}, {drow, dcol});
}

CovarianceMatrix build_covariance(const NoiseModel& model, int h, int w) {
  return repair(model, h, w).matrix;
}

ExactNoiseSampler::ExactNoiseSampler(const NoiseModel& model, int h, int w) {
  RepairedCovariance r = repair(model, h, w);
  covariance_ = std::move(r.matrix);
  factor_ = std::move(r.factor);
}

Image ExactNoiseSampler::sample(int channels, Rng& rng) const {
  const int h = covariance_.height;
  const int w = covariance_.width;
  const int n = h * w;
  Image out(h, w, channels);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (int ch = 0; ch < channels; ++ch) {
    for (int a = 0; a < n; ++a) z(a) = normal(rng);
    const Eigen::VectorXd field = factor_ * z;
    for (int a = 0; a < n; ++a) out.at(a / w, a % w, ch) = static_cast<float>(field(a));
  }
  return out;
}

struct FastNoiseSampler::Plan {
  fftw_plan plan = nullptr;
  std::size_t size = 0;
};

FastNoiseSampler::FastNoiseSampler(const NoiseModel& model, int h, int w)
    : height_(h), width_(w), plan_(std::make_unique<Plan>()) {
  model.validate();
  require_grid(h, w);
  const int reach = static_cast<int>(std::ceil(model.kernel_width)) + 1;
  torus_rows_ = std::max(2 * h, h + reach);
  torus_cols_ = std::max(2 * w, w + reach);
  const std::size_t m = static_cast<std::size_t>(torus_rows_) * torus_cols_;
  plan_->size = m;

  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan_->plan = fftw_plan_dft_2d(torus_rows_, torus_cols_, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (int r = 0; r < torus_rows_; ++r) {
    const int lr = std::min(r, torus_rows_ - r);
    for (int q = 0; q < torus_cols_; ++q) {
      const int lq = std::min(q, torus_cols_ - q);
      const std::size_t i = static_cast<std::size_t>(r) * torus_cols_ + q;
      buf[i][0] = covariance_at_lag(model, lr, lq);
      buf[i][1] = 0.0;
    }
  }
  fftw_execute_dft(plan_->plan, buf, buf);

  std::vector<double> eig(m);
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    eig[i] = std::max(buf[i][0], 0.0);
    mean += eig[i];
  }
  mean /= static_cast<double>(m);
  if (!(mean > 0.0)) {
    fftw_free(buf);
    throw NumericalError("circulant embedding produced an empty spectrum");
  }
  const double rescale = model.sigma * model.sigma / mean;
  spectral_sqrt_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    eig[i] *= rescale;
    spectral_sqrt_[i] = std::sqrt(eig[i] / static_cast<double>(m));
  }

  // Covariance implied by the clipped spectrum: inverse transform / m. The
  // spectrum is real and even, so a forward transform gives the same result.
  for (std::size_t i = 0; i < m; ++i) {
    buf[i][0] = eig[i];
    buf[i][1] = 0.0;
  }
  fftw_execute_dft(plan_->plan, buf, buf);
  implied_.resize(m);
  for (std::size_t i = 0; i < m; ++i) implied_[i] = buf[i][0] / static_cast<double>(m);
  fftw_free(buf);
}

FastNoiseSampler::~FastNoiseSampler() {
  if (plan_ && plan_->plan) {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_->plan);
  }
}

double FastNoiseSampler::implied_covariance(int drow, int dcol) const {
  const int r = ((drow % torus_rows_) + torus_rows_) % torus_rows_;
  const int q = ((dcol % torus_cols_) + torus_cols_) % torus_cols_;
  return implied_[static_cast<std::size_t>(r) * torus_cols_ + q];
}

Image FastNoiseSampler::sample(int channels, Rng& rng) const {
  const std::size_t m = plan_->size;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
  std::normal_distribution<double> normal(0.0, 1.0);
  Image out(height_, width_, channels);
  for (int ch = 0; ch < channels; ch += 2) {
    for (std::size_t i = 0; i < m; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      buf[i][0] = spectral_sqrt_[i] * re;
      buf[i][1] = spectral_sqrt_[i] * im;
    }
    fftw_execute_dft(plan_->plan, buf, buf);
    for (int r = 0; r < height_; ++r) {
      for (int q = 0; q < width_; ++q) {
        const std::size_t i = static_cast<std::size_t>(r) * torus_cols_ + q;
        out.at(r, q, ch) = static_cast<float>(buf[i][0]);
        if (ch + 1 < channels) out.at(r, q, ch + 1) = static_cast<float>(buf[i][1]);
      }
    }
  }
  fftw_free(buf);
  return out;
}

Image sample_noise_exact(const NoiseModel& model, int h, int w, int c, Rng& rng) {
  return ExactNoiseSampler(model, h, w).sample(c, rng);
}

Image sample_noise_fast(const NoiseModel& model, int h, int w, int c, Rng& rng) {
  return FastNoiseSampler(model, h, w).sample(c, rng);
}

Image add_noise(const Image& clean, const NoiseModel& model, Rng& rng) {
  const Image noise = sample_noise_fast(model, clean.height(), clean.width(), clean.channels(), rng);
  Image noisy = clean;
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += noise[i];
  return noisy;
}

AutocovarianceTable::AutocovarianceTable(int max_lag, std::vector<LagCovariance> entries)
    : max_lag_(max_lag), entries_(std::move(entries)) {}

double AutocovarianceTable::at(int lag_row, int lag_col) const {
  if (std::abs(lag_row) > max_lag_ || std::abs(lag_col) > max_lag_) {
    throw UsageError("lag outside autocovariance table");
  }
  const int span = 2 * max_lag_ + 1;
  return entries_[static_cast<std::size_t>(lag_row + max_lag_) * span + (lag_col + max_lag_)]
      .covariance;
}

AutocovarianceAccumulator::AutocovarianceAccumulator(int max_lag) : max_lag_(max_lag) {
  if (max_lag < 0) throw UsageError("max_lag must be >= 0");
  const std::size_t span = 2 * static_cast<std::size_t>(max_lag) + 1;
  sums_.assign(span * span, 0.0);
  counts_.assign(span * span, 0);
}

void AutocovarianceAccumulator::add(const Image& sample) {
  if (samples_ == 0) {
    height_ = sample.height();
    width_ = sample.width();
    channels_ = sample.channels();
  } else if (sample.height() != height_ || sample.width() != width_ ||
             sample.channels() != channels_) {
    throw ShapeError("autocovariance samples must share one shape");
  }
  const int span = 2 * max_lag_ + 1;
  for (int dr = -max_lag_; dr <= max_lag_; ++dr) {
    for (int dc = -max_lag_; dc <= max_lag_; ++dc) {
      const std::size_t slot = static_cast<std::size_t>(dr + max_lag_) * span + (dc + max_lag_);
      double s = 0.0;
      std::size_t cnt = 0;
      const int r0 = std::max(0, -dr);
      const int r1 = std::min(height_, height_ - dr);
      const int c0 = std::max(0, -dc);
      const int c1 = std::min(width_, width_ - dc);
      for (int r = r0; r < r1; ++r) {
        for (int q = c0; q < c1; ++q) {
          for (int ch = 0; ch < channels_; ++ch) {
            s += static_cast<double>(sample.at(r, q, ch)) * sample.at(r + dr, q + dc, ch);
            ++cnt;
          }
        }
      }
      sums_[slot] += s;
      counts_[slot] += cnt;
    }
  }
  ++samples_;
}

AutocovarianceTable AutocovarianceAccumulator::table() const {
  if (samples_ == 0) throw UsageError("autocovariance needs at least one sample");
  std::vector<LagCovariance> entries;
  entries.reserve(sums_.size());
  const int span = 2 * max_lag_ + 1;
  for (int dr = -max_lag_; dr <= max_lag_; ++dr) {
    for (int dc = -max_lag_; dc <= max_lag_; ++dc) {
      const std::size_t slot = static_cast<std::size_t>(dr + max_lag_) * span + (dc + max_lag_);
      LagCovariance e;
      e.lag_row = dr;
      e.lag_col = dc;
      e.count = counts_[slot];
      e.covariance = counts_[slot] > 0 ? sums_[slot] / static_cast<double>(counts_[slot]) : 0.0;
      entries.push_back(e);
    }
  }
  return AutocovarianceTable(max_lag_, std::move(entries));
}

AutocovarianceTable empirical_autocovariance(std::span<const Image> samples, int max_lag) {
  if (samples.size() < 2) throw UsageError("empirical_autocovariance needs at least 2 samples");
  AutocovarianceAccumulator acc(max_lag);
  for (const Image& s : samples) acc.add(s);
  return acc.table();
}

CovarianceAccumulator::CovarianceAccumulator(int h, int w)
    : height_(h), width_(w), sum_outer_(Eigen::MatrixXd::Zero(h * w, h * w)) {
  require_grid(h, w);
}

void CovarianceAccumulator::add(const Image& sample) {
  if (sample.height() != height_ || sample.width() != width_) {
    throw ShapeError("covariance samples must match the grid");
  }
  const int n = height_ * width_;
  for (int ch = 0; ch < sample.channels(); ++ch) {
    Eigen::VectorXd v(n);
    for (int a = 0; a < n; ++a) v(a) = sample.at(a / width_, a % width_, ch);
    sum_outer_.selfadjointView<Eigen::Lower>().rankUpdate(v);
    ++samples_;
  }
}

Eigen::MatrixXd CovarianceAccumulator::covariance() const {
  if (samples_ == 0) throw UsageError("no samples accumulated");
  Eigen::MatrixXd full = sum_outer_.selfadjointView<Eigen::Lower>();
  return full / static_cast<double>(samples_);
}

}  // namespace mash
