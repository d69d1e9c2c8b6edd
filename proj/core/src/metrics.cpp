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

#include <cmath>
#include <limits>
#include <vector>

#include "mash/error.hpp"
#include "mash/image.hpp"

namespace mash {
namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

std::vector<double> gaussian_kernel_1d() {
  std::vector<double> k(kWindow);
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    k[i] = std::exp(-(x * x) / (2.0 * kWindowSigma * kWindowSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable "valid" Gaussian filter of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::vector<double>& k) {
  const int ow = w - kWindow + 1;
  const int oh = h - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int r = 0; r < h; ++r) {
    for (int q = 0; q < ow; ++q) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += k[t] * plane[static_cast<std::size_t>(r) * w + q + t];
      tmp[static_cast<std::size_t>(r) * ow + q] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int r = 0; r < oh; ++r) {
    for (int q = 0; q < ow; ++q) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += k[t] * tmp[static_cast<std::size_t>(r + t) * ow + q];
      out[static_cast<std::size_t>(r) * ow + q] = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw ShapeError("psnr: empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(a.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  const int h = a.height();
  const int w = a.width();
  if (h < kWindow || w < kWindow) throw ShapeError("ssim: image smaller than the 11x11 window");
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const auto k = gaussian_kernel_1d();
  const std::size_t n = a.pixel_count();

  double total = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a[i * a.channels() + ch];
      y[i] = b[i * a.channels() + ch];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, k);
    const auto my = filter_valid(y, h, w, k);
    const auto sxx = filter_valid(xx, h, w, k);
    const auto syy = filter_valid(yy, h, w, k);
    const auto sxy = filter_valid(xy, h, w, k);
    double sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += sum / static_cast<double>(mx.size());
  }
  return total / a.channels();
}

MetricReport compare(const Image& reference, const Image& test) {
  MetricReport report;
  report.psnr = psnr(reference, test);
  report.ssim = (reference.height() >= kWindow && reference.width() >= kWindow)
                    ? ssim(reference, test)
                    : std::numeric_limits<double>::quiet_NaN();
  return report;
}

}  // namespace mash
