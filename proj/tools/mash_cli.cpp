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

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mash/config.hpp"
#include "mash/error.hpp"
#include "mash/harness.hpp"
#include "mash/image.hpp"
#include "mash/noise.hpp"
#include "mash/pipeline.hpp"
#include "mash/rng.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kDivergence = 3 };

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string preset;
  std::optional<int> threads;
  std::vector<std::string> overrides;  // key=value
  std::string cache_dir;
  bool quiet = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config_path, "key = value configuration file");
  sub->add_option("--seed", o.seed, "root seed");
  sub->add_option("--out-dir", o.out_dir, "output directory");
  sub->add_option("--preset", o.preset, "desk or ci")->check(CLI::IsMember({"desk", "ci"}));
  sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--set", o.overrides, "extra key=value overrides");
  sub->add_option("--cache", o.cache_dir, "directory for memoised runs");
  sub->add_flag("-q,--quiet", o.quiet, "no progress output");
}

// Precedence: preset, then config file, then explicit flags.
mash::ExperimentConfig resolve_config(const CommonOptions& o) {
  mash::ExperimentConfig cfg = mash::ExperimentConfig::from_preset(o.preset.empty() ? "desk" : o.preset);
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw mash::IoError("cannot read config " + o.config_path);
    std::stringstream text;
    text << in.rdbuf();
    auto kv = mash::parse_key_values(text.str());
    if (auto it = kv.find("preset"); it != kv.end()) {
      if (o.preset.empty()) mash::set_config_value(cfg, "preset", it->second);
      kv.erase(it);
    }
    for (const auto& [k, v] : kv) mash::set_config_value(cfg, k, v);
  }
  for (const auto& item : o.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw mash::UsageError("--set expects key=value, got " + item);
    mash::set_config_value(cfg, item.substr(0, eq), item.substr(eq + 1));
  }
  if (o.seed) cfg.mash.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

mash::ProgressFn progress_for(const CommonOptions& o) {
  if (o.quiet) return {};
  return [](const std::string& msg) { std::cerr << msg << std::endl; };
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

void write_config_snapshot(const mash::ExperimentConfig& cfg, const fs::path& dir) {
  mash::write_text_file(dir / "config.txt", mash::to_text(cfg));
}

std::vector<mash::ExperimentImage> experiment_images(const mash::ExperimentConfig& cfg) {
  if (cfg.images.empty()) throw mash::UsageError("no images configured (set images = a.png,b.png)");
  return mash::load_experiment_images(cfg.images, cfg.crop_size);
}

struct SynthArgs {
  std::string input;
  std::string output;
  std::string noise_output;
  int autocov_lag = 0;
  int autocov_samples = 64;
  bool exact = false;
};

int cmd_synth(const CommonOptions& o, const SynthArgs& a) {
  const auto cfg = resolve_config(o);
  const mash::Image clean = mash::load_image(a.input);
  mash::Rng rng = mash::make_rng(cfg.mash.seed, mash::Stream::kNoise,
                                 mash::hash_string(fs::path(a.input).stem().string()));
  const int h = clean.height(), w = clean.width(), c = clean.channels();
  const mash::Image noise = a.exact ? mash::sample_noise_exact(cfg.noise, h, w, c, rng)
                                    : mash::sample_noise_fast(cfg.noise, h, w, c, rng);
  mash::Image noisy = clean;
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += noise[i];

  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  const fs::path out = a.output.empty() ? dir / "noisy.rawf32" : fs::path(a.output);
  mash::save_image(noisy, out, mash::format_for_path(out));
  if (!a.noise_output.empty()) {
    mash::save_image(noise, a.noise_output, mash::format_for_path(a.noise_output));
  }
  if (a.autocov_lag > 0) {
    mash::AutocovarianceAccumulator acc(a.autocov_lag);
    acc.add(noise);
    for (int s = 1; s < a.autocov_samples; ++s) {
      acc.add(a.exact ? mash::sample_noise_exact(cfg.noise, h, w, c, rng)
                      : mash::sample_noise_fast(cfg.noise, h, w, c, rng));
    }
    std::ostringstream csv;
    csv << "lag_row,lag_col,covariance\n";
    for (const auto& e : acc.table().entries()) {
      csv << e.lag_row << ',' << e.lag_col << ',' << fmt(e.covariance) << '\n';
    }
    mash::write_text_file(dir / "autocovariance.csv", csv.str());
  }
  std::cout << "noisy_psnr=" << fmt(mash::psnr(clean, noisy)) << "\n";
  return kOk;
}

struct RunArgs {
  std::string input;
  std::string clean;
  double tau = 0.5;
  bool lps = false;
};

int cmd_denoise(const CommonOptions& o, const RunArgs& a, bool baseline) {
  const auto cfg = resolve_config(o);
  const mash::Image y = mash::load_image(a.input);
  std::optional<mash::Image> clean;
  if (!a.clean.empty()) clean = mash::load_image(a.clean);
  mash::RunOptions opts;
  opts.name = a.input;
  opts.clean = clean ? &*clean : nullptr;
  opts.threads = cfg.threads;
  const mash::RunResult r = baseline ? mash::run_fixed(y, a.tau, a.lps, cfg.mash, opts)
                                     : mash::run_mash(y, cfg.mash, opts);
  const fs::path dir(o.out_dir);
  mash::write_run_outputs(r, dir);
  write_config_snapshot(cfg, dir);
  if (r.report.gap) std::cout << r.report.gap->to_record();
  std::cout << "tau=" << fmt(r.report.tau) << "\nshuffle_enabled=" << r.report.shuffle_enabled
            << "\n";
  if (r.report.metrics) {
    std::cout << "psnr=" << fmt(r.report.metrics->psnr) << "\nssim=" << fmt(r.report.metrics->ssim)
              << "\n";
  }
  return kOk;
}

std::unique_ptr<mash::RunCache> make_cache(const CommonOptions& o) {
  return std::make_unique<mash::RunCache>(o.cache_dir.empty() ? fs::path() : fs::path(o.cache_dir));
}

int cmd_sweep(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  mash::SweepSpec spec;
  spec.images = experiment_images(cfg);
  spec.tau_grid = cfg.tau_grid;
  spec.beta_grid = cfg.beta_grid;
  spec.sigma = cfg.noise.sigma;
  spec.kernel_width = cfg.noise.kernel_width;
  spec.norm = cfg.noise.norm;
  spec.repetitions = cfg.repetitions;
  spec.lps_flags = cfg.lps_flags;
  auto cache = make_cache(o);
  const auto table = mash::sweep(spec, cfg.mash, cfg.threads, cache.get(), progress_for(o));
  const fs::path dir(o.out_dir);
  mash::write_text_file(dir / "sweep.csv", table.to_csv());
  mash::write_text_file(dir / "failures.csv", table.failures_csv());
  write_config_snapshot(cfg, dir);
  std::cout << "rows=" << table.rows.size() << "\nfailures=" << table.failures.size() << "\n";
  return table.failures.empty() ? kOk : kDivergence;
}

int cmd_gap_curves(const CommonOptions& o, const std::vector<double>& betas) {
  const auto cfg = resolve_config(o);
  auto cache = make_cache(o);
  const auto curves = mash::gap_curves(experiment_images(cfg), betas, cfg.noise, cfg.mash,
                                       cfg.threads, cache.get(), progress_for(o));
  const fs::path dir(o.out_dir);
  mash::write_text_file(dir / "gap_traces.csv", curves.traces_csv());
  mash::write_text_file(dir / "gap_summary.csv", curves.summary_csv());
  write_config_snapshot(cfg, dir);
  for (double b : betas) std::cout << "mean_epsilon[beta=" << fmt(b) << "]=" << fmt(curves.mean_epsilon(b)) << "\n";
  return kOk;
}

int cmd_audit(const CommonOptions& o) {
  const auto cfg = resolve_config(o);
  const auto images = experiment_images(cfg);
  std::vector<mash::AuditInput> inputs;
  for (const auto& img : images) {
    for (double beta : cfg.beta_grid) {
      mash::NoiseModel m = cfg.noise;
      m.beta = beta;
      inputs.push_back({img.name + "@beta=" + fmt(beta), mash::make_noisy(img, m, cfg.mash.seed),
                        img.clean});
    }
  }
  auto cache = make_cache(o);
  const auto audit =
      mash::masking_accuracy_audit(inputs, cfg.mash, cfg.threads, cache.get(), progress_for(o));
  const fs::path dir(o.out_dir);
  mash::write_text_file(dir / "audit.csv", audit.to_csv());
  write_config_snapshot(cfg, dir);
  std::cout << "accuracy=" << fmt(audit.accuracy) << "\nsuccesses=" << audit.successes << "/"
            << audit.cells.size() << "\n";
  return kOk;
}

int cmd_metrics(const std::string& reference, const std::string& test) {
  const mash::Image a = mash::load_image(reference);
  const mash::Image b = mash::load_image(test);
  const mash::MetricReport m = mash::compare(a, b);
  std::cout << "psnr=" << fmt(m.psnr) << "\nssim=" << fmt(m.ssim) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-masking blind-spot denoiser"};
  app.require_subcommand(1);
  CommonOptions common;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "add correlated Gaussian noise to a clean image");
  add_common(s, common);
  s->add_option("--input", synth.input, "clean image")->required();
  s->add_option("--output", synth.output, "noisy image path (default <out-dir>/noisy.rawf32)");
  s->add_option("--noise-output", synth.noise_output, "write the noise field");
  s->add_option("--autocov-lag", synth.autocov_lag, "write autocovariance.csv up to this lag");
  s->add_option("--autocov-samples", synth.autocov_samples, "noise fields for the autocovariance");
  s->add_flag("--exact", synth.exact, "dense eigen-factor sampler (small images only)");
  std::string sigma_s, beta_s, k_s;
  s->add_option("--sigma", sigma_s, "noise standard deviation");
  s->add_option("--beta", beta_s, "correlation magnitude");
  s->add_option("-k,--kernel-width", k_s, "correlation radius");

  RunArgs run;
  auto* d = app.add_subcommand("denoise", "adaptive masking run on one image");
  add_common(d, common);
  d->add_option("--input", run.input, "noisy image")->required();
  d->add_option("--clean", run.clean, "ground truth for metrics");

  RunArgs base;
  auto* b = app.add_subcommand("baseline", "fixed masking ratio run");
  add_common(b, common);
  b->add_option("--input", base.input, "noisy image")->required();
  b->add_option("--clean", base.clean, "ground truth for metrics");
  b->add_option("--tau", base.tau, "masking ratio")->check(CLI::Range(0.0, 1.0));
  b->add_flag("--lps", base.lps, "enable local pixel shuffling");

  auto* sw = app.add_subcommand("sweep", "masking ratio x correlation grid");
  add_common(sw, common);

  std::vector<double> gap_betas = {0.0, 0.5, 1.0};
  auto* g = app.add_subcommand("gap-curves", "sigma-hat traces of the warm-up runs");
  add_common(g, common);
  g->add_option("--betas", gap_betas, "correlation magnitudes")->delimiter(',');

  auto* au = app.add_subcommand("audit-masking", "accuracy of the ratio selection");
  add_common(au, common);

  std::string ref_path, test_path;
  auto* m = app.add_subcommand("metrics", "PSNR and SSIM of two images");
  m->add_option("reference", ref_path)->required();
  m->add_option("test", test_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (!sigma_s.empty()) common.overrides.push_back("noise_sigma=" + sigma_s);
    if (!beta_s.empty()) common.overrides.push_back("noise_beta=" + beta_s);
    if (!k_s.empty()) common.overrides.push_back("noise_kernel_width=" + k_s);
    if (s->parsed()) return cmd_synth(common, synth);
    if (d->parsed()) return cmd_denoise(common, run, false);
    if (b->parsed()) return cmd_denoise(common, base, true);
    if (sw->parsed()) return cmd_sweep(common);
    if (g->parsed()) return cmd_gap_curves(common, gap_betas);
    if (au->parsed()) return cmd_audit(common);
    if (m->parsed()) return cmd_metrics(ref_path, test_path);
  } catch (const mash::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const mash::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const mash::NumericalError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
