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

#include <span>
#include <vector>

#include "mash/net.hpp"

namespace mash {

struct AdamSettings {
  double base_lr = 1e-4;
  double floor_lr = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 coefficient added to the gradient
  long total_steps = 800;

  friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

// lr(t) = base * a + floor * (1 - a), a = (1 + cos(pi * t / N)) / 2, with t
// clamped to [0, N].
double cosine_learning_rate(const AdamSettings& settings, long step);

template <typename T>
struct OptimState {
  AdamSettings settings;
  long step = 0;
  std::vector<T> first_moment;
  std::vector<T> second_moment;

  OptimState() = default;
  OptimState(const AdamSettings& s, std::size_t parameter_count)
      : settings(s), first_moment(parameter_count, T(0)), second_moment(parameter_count, T(0)) {}

  [[nodiscard]] double learning_rate() const { return cosine_learning_rate(settings, step); }
};

// One bias-corrected Adam update at the scheduled rate; increments the step.
// Throws NumericalError when a gradient is not finite.
template <typename T>
void adam_update(std::span<T> parameters, OptimState<T>& opt, std::span<const T> grads);

template <typename T>
void adam_step(DenoiserModel<T>& model, OptimState<T>& opt, std::span<const T> grads) {
  adam_update<T>(model.parameters, opt, grads);
}

}  // namespace mash
