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

#include "mash/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mash/error.hpp"

namespace mash {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw UsageError("config key '" + key + "': not a number: '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("config key '" + key + "': not an integer: '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  return static_cast<int>(to_integer(key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  throw UsageError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

template <typename V, typename F>
std::string join(const std::vector<V>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ",";
    out += fmt(items[i]);
  }
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_preset(std::string_view name) {
  ExperimentConfig c;
  c.preset = std::string(name);
  if (name == "desk") {
    c.mash = MashConfig::desk_preset();
    c.crop_size = 128;
  } else if (name == "ci") {
    c.mash = MashConfig::ci_preset();
    c.crop_size = 64;
  } else {
    throw UsageError("unknown preset '" + std::string(name) + "' (expected desk or ci)");
  }
  return c;
}

void ExperimentConfig::validate() const {
  mash.validate();
  noise.validate();
  if (crop_size < 8) throw UsageError("crop_size must be >= 8");
  if (tau_grid.empty() || beta_grid.empty() || lps_flags.empty()) {
    throw UsageError("sweep grids must be non-empty");
  }
  for (const double t : tau_grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("tau_grid values must lie in [0, 1]");
  }
  for (const double b : beta_grid) {
    if (!(b >= 0.0)) throw UsageError("beta_grid values must be >= 0");
  }
  if (repetitions < 1) throw UsageError("repetitions must be >= 1");
  if (threads < 1) throw UsageError("threads must be >= 1");
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = trim(std::string_view(stripped).substr(eq + 1));
  }
  return kv;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& v) {
  MashConfig& m = cfg.mash;
  if (key == "tau_low") m.tau_low = to_double(key, v);
  else if (key == "tau_medium") m.tau_medium = to_double(key, v);
  else if (key == "tau_high") m.tau_high = to_double(key, v);
  else if (key == "eps_low") m.eps_low = to_double(key, v);
  else if (key == "eps_high") m.eps_high = to_double(key, v);
  else if (key == "iterations") m.iterations = to_int(key, v);
  else if (key == "shuffle_start") m.shuffle_start = to_int(key, v);
  else if (key == "warmup_iterations") m.warmup_iterations = to_int(key, v);
  else if (key == "ensemble_size") m.ensemble_size = to_int(key, v);
  else if (key == "tile_size") m.tile_size = to_int(key, v);
  else if (key == "flat_threshold") m.flat_threshold = to_double(key, v);
  else if (key == "sigma_window") m.sigma_window = to_int(key, v);
  else if (key == "seed") m.seed = static_cast<std::uint64_t>(to_integer(key, v));
  else if (key == "reduced_net") m.reduced_net = to_bool(key, v);
  else if (key == "base_lr") m.adam.base_lr = to_double(key, v);
  else if (key == "floor_lr") m.adam.floor_lr = to_double(key, v);
  else if (key == "weight_decay") m.adam.weight_decay = to_double(key, v);
  else if (key == "noise_sigma") cfg.noise.sigma = to_double(key, v);
  else if (key == "noise_beta") cfg.noise.beta = to_double(key, v);
  else if (key == "noise_kernel_width") cfg.noise.kernel_width = to_double(key, v);
  else if (key == "noise_norm") {
    if (v == "euclidean") cfg.noise.norm = DistanceNorm::kEuclidean;
    else if (v == "chebyshev") cfg.noise.norm = DistanceNorm::kChebyshev;
    else throw UsageError("noise_norm must be euclidean or chebyshev");
  } else if (key == "crop_size") cfg.crop_size = to_int(key, v);
  else if (key == "tau_grid") {
    cfg.tau_grid.clear();
    for (const auto& s : split_list(v)) cfg.tau_grid.push_back(to_double(key, s));
  } else if (key == "beta_grid") {
    cfg.beta_grid.clear();
    for (const auto& s : split_list(v)) cfg.beta_grid.push_back(to_double(key, s));
  } else if (key == "repetitions") cfg.repetitions = to_int(key, v);
  else if (key == "lps") {
    cfg.lps_flags.clear();
    for (const auto& s : split_list(v)) cfg.lps_flags.push_back(to_bool(key, s));
  } else if (key == "images") cfg.images = split_list(v);
  else if (key == "threads") cfg.threads = to_int(key, v);
  else if (key == "preset") cfg = ExperimentConfig::from_preset(v);
  else throw UsageError("unknown config key '" + key + "'");
}

ExperimentConfig parse_experiment_config(std::string_view text, ExperimentConfig base) {
  auto kv = parse_key_values(text);
  if (auto it = kv.find("preset"); it != kv.end()) {
    base = ExperimentConfig::from_preset(it->second);
    kv.erase(it);
  }
  for (const auto& [key, value] : kv) set_config_value(base, key, value);
  base.validate();
  return base;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str(), std::move(base));
}

std::string to_text(const ExperimentConfig& cfg) {
  const MashConfig& m = cfg.mash;
  std::ostringstream out;
  out << "preset = " << cfg.preset << '\n'
      << "tau_low = " << format_double(m.tau_low) << '\n'
      << "tau_medium = " << format_double(m.tau_medium) << '\n'
      << "tau_high = " << format_double(m.tau_high) << '\n'
      << "eps_low = " << format_double(m.eps_low) << '\n'
      << "eps_high = " << format_double(m.eps_high) << '\n'
      << "iterations = " << m.iterations << '\n'
      << "shuffle_start = " << m.shuffle_start << '\n'
      << "warmup_iterations = " << m.warmup_iterations << '\n'
      << "ensemble_size = " << m.ensemble_size << '\n'
      << "tile_size = " << m.tile_size << '\n'
      << "flat_threshold = " << format_double(m.flat_threshold) << '\n'
      << "sigma_window = " << m.sigma_window << '\n'
      << "seed = " << m.seed << '\n'
      << "reduced_net = " << (m.reduced_net ? "true" : "false") << '\n'
      << "base_lr = " << format_double(m.adam.base_lr) << '\n'
      << "floor_lr = " << format_double(m.adam.floor_lr) << '\n'
      << "weight_decay = " << format_double(m.adam.weight_decay) << '\n'
      << "noise_sigma = " << format_double(cfg.noise.sigma) << '\n'
      << "noise_beta = " << format_double(cfg.noise.beta) << '\n'
      << "noise_kernel_width = " << format_double(cfg.noise.kernel_width) << '\n'
      << "noise_norm = "
      << (cfg.noise.norm == DistanceNorm::kChebyshev ? "chebyshev" : "euclidean") << '\n'
      << "crop_size = " << cfg.crop_size << '\n'
      << "tau_grid = " << join(cfg.tau_grid, format_double) << '\n'
      << "beta_grid = " << join(cfg.beta_grid, format_double) << '\n'
      << "repetitions = " << cfg.repetitions << '\n'
      << "lps = " << join(cfg.lps_flags, [](bool b) { return std::string(b ? "on" : "off"); })
      << '\n';
  if (!cfg.images.empty()) {
    out << "images = " << join(cfg.images, [](const std::string& s) { return s; }) << '\n';
  }
  out << "threads = " << cfg.threads << '\n';
  return out.str();
}

std::string fingerprint(const MashConfig& m) {
  std::ostringstream out;
  out << std::setprecision(17) << "tl" << m.tau_low << "|tm" << m.tau_medium << "|th"
      << m.tau_high << "|el" << m.eps_low << "|eh" << m.eps_high << "|n" << m.iterations << "|n1"
      << m.shuffle_start << "|w" << m.warmup_iterations << "|k" << m.ensemble_size << "|s"
      << m.tile_size << "|l" << m.flat_threshold << "|sw" << m.sigma_window << "|seed" << m.seed
      << "|r" << m.reduced_net << "|lr" << m.adam.base_lr << "|fl" << m.adam.floor_lr << "|b1"
      << m.adam.beta1 << "|b2" << m.adam.beta2 << "|e" << m.adam.epsilon << "|wd"
      << m.adam.weight_decay;
  return out.str();
}

}  // namespace mash
