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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mash/bsd.hpp"
#include "mash/noise.hpp"

namespace mash {

// Everything the command line tool and the experiment harness can be told.
//
// The text form is one `key = value` per line; `#` starts a comment; lists
// are comma separated. Keys:
//
//   preset              desk | ci (applied first, other keys override it)
//   tau_low tau_medium tau_high eps_low eps_high
//   iterations shuffle_start warmup_iterations ensemble_size tile_size
//   flat_threshold sigma_window seed reduced_net
//   base_lr floor_lr weight_decay
//   noise_sigma noise_beta noise_kernel_width noise_norm (euclidean|chebyshev)
//   crop_size tau_grid beta_grid repetitions lps (list of on|off) images threads
struct ExperimentConfig {
  std::string preset = "desk";
  MashConfig mash;
  NoiseModel noise;
  int crop_size = 128;
  std::vector<double> tau_grid = {0.1, 0.2, 0.3, 0.5, 0.7, 0.8};
  std::vector<double> beta_grid = {0.0, 1.0};
  int repetitions = 1;
  std::vector<bool> lps_flags = {false};
  std::vector<std::string> images;
  int threads = 1;

  static ExperimentConfig from_preset(std::string_view name);
  void validate() const;
};

std::map<std::string, std::string> parse_key_values(std::string_view text);

// Applies the keys of `text` on top of `base` (after resetting to the preset
// named in the text, if any). Unknown keys are errors.
ExperimentConfig parse_experiment_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        ExperimentConfig base = {});

// Applies one key; used for command line overrides.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Canonical text form; parse_experiment_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);

// Stable text identity of everything that influences a training run.
std::string fingerprint(const MashConfig& cfg);

}  // namespace mash
