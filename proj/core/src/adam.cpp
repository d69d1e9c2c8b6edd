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

#include "mash/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mash/error.hpp"

namespace mash {

double cosine_learning_rate(const AdamSettings& settings, long step) {
  const long n = std::max(settings.total_steps, 1L);
  const long t = std::clamp(step, 0L, n);
  const double a = 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(t) / n));
  return settings.base_lr * a + settings.floor_lr * (1.0 - a);
}

template <typename T>
void adam_update(std::span<T> parameters, OptimState<T>& opt, std::span<const T> grads) {
  if (grads.size() != parameters.size() || opt.first_moment.size() != parameters.size() ||
      opt.second_moment.size() != parameters.size()) {
    throw ShapeError("adam: parameter, gradient and moment sizes differ");
  }
  for (const T g : grads) {
    if (!std::isfinite(static_cast<double>(g))) {
      throw NumericalError("adam: non-finite gradient");
    }
  }
  const AdamSettings& s = opt.settings;
  const double lr = opt.learning_rate();
  const double t = static_cast<double>(opt.step + 1);
  const double correction1 = 1.0 - std::pow(s.beta1, t);
  const double correction2 = 1.0 - std::pow(s.beta2, t);
  const T b1 = static_cast<T>(s.beta1);
  const T b2 = static_cast<T>(s.beta2);
  const T step_size = static_cast<T>(lr / correction1);
  const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(correction2));
  const T eps = static_cast<T>(s.epsilon);
  const T decay = static_cast<T>(s.weight_decay);
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    const T g = grads[i] + decay * parameters[i];
    T& m = opt.first_moment[i];
    T& v = opt.second_moment[i];
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g * g;
    parameters[i] -= step_size * m / (std::sqrt(v) * inv_sqrt_c2 + eps);
  }
  ++opt.step;
}

template void adam_update<float>(std::span<float>, OptimState<float>&, std::span<const float>);
template void adam_update<double>(std::span<double>, OptimState<double>&,
                                  std::span<const double>);

}  // namespace mash
