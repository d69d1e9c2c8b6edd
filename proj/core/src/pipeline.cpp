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

#include "mash/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <future>
#include <iomanip>
#include <numeric>

#include "mash/error.hpp"

namespace mash {
namespace {

constexpr std::uint64_t kPseudoCleanIndex = 0x5053;  // "PS"

Image pad_for_net(const Image& y, const NetConfig& net) {
  const int d = net.size_divisor();
  return reflect_pad(y, round_up(y.height(), d), round_up(y.width(), d));
}

Image crop_back(const Image& padded, const Image& original) {
  if (padded.same_shape(original)) return padded;
  return crop(padded, 0, 0, original.height(), original.width());
}

RunReport base_report(const Image& y, const MashConfig& cfg, const RunOptions& options) {
  RunReport r;
  r.input_name = options.name;
  r.height = y.height();
  r.width = y.width();
  r.channels = y.channels();
  r.noise = options.noise;
  r.seed = cfg.seed;
  r.config = cfg;
  return r;
}

void finish_report(RunReport& report, const Image& denoised, const RunOptions& options,
                   std::chrono::steady_clock::time_point start) {
  if (options.clean != nullptr) report.metrics = compare(*options.clean, denoised);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

NetConfig net_config_for(const MashConfig& cfg, int channels) {
  return cfg.reduced_net ? NetConfig::reduced_variant(channels) : NetConfig::standard(channels);
}

double TrainingTrace::converged_sigma(int window) const {
  if (sigma_hat.empty()) return 0.0;
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(window), sigma_hat.size());
  const double sum = std::accumulate(sigma_hat.end() - static_cast<std::ptrdiff_t>(n),
                                     sigma_hat.end(), 0.0);
  return sum / static_cast<double>(n);
}

TrainedRun train_fixed(const Image& y_padded, double tau, int iterations, bool shuffle,
                       const MashConfig& cfg) {
  const NetConfig net = net_config_for(cfg, y_padded.channels());
  Rng init_rng = make_rng(cfg.seed, Stream::kInit);
  AdamSettings adam = cfg.adam;
  adam.total_steps = iterations;
  BsdTrainer trainer(init_model<float>(net, init_rng), adam);
  Rng mask_rng = make_rng(cfg.seed, Stream::kTrainMask, hash_double(tau));

  TrainedRun run;
  run.trace.tau = tau;
  run.trace.loss.reserve(static_cast<std::size_t>(iterations));
  run.trace.sigma_hat.reserve(static_cast<std::size_t>(iterations));
  const Image* target = &y_padded;
  Image shuffled_target;
  for (int t = 0; t < iterations; ++t) {
    if (shuffle && t == cfg.shuffle_start) {
      Rng pseudo_rng = make_rng(cfg.seed, Stream::kEnsemble, hash_double(tau) ^ kPseudoCleanIndex);
      const Image pseudo_clean =
          ensemble_predict(trainer.model(), y_padded, tau, cfg.ensemble_size, pseudo_rng);
      FlatnessMap fmap = flatness_map(pseudo_clean, cfg.tile_size, cfg.flat_threshold);
      ShuffledImage s = local_shuffle(y_padded, fmap,
                                      derive_seed(cfg.seed, Stream::kShuffle, hash_double(tau)));
      shuffled_target = std::move(s.image);
      target = &shuffled_target;
      run.flatness = std::move(fmap);
    }
    const StepStats stats = trainer.step(y_padded, *target, tau, mask_rng);
    run.trace.loss.push_back(stats.loss);
    run.trace.sigma_hat.push_back(stats.sigma_hat);
  }
  if (shuffle && target == &shuffled_target) run.shuffled = std::move(shuffled_target);
  run.model = std::move(trainer.model());
  return run;
}

Image ensemble_output(const DenoiserModel<float>& model, const Image& y_padded, double tau,
                      const MashConfig& cfg) {
  Rng rng = make_rng(cfg.seed, Stream::kEnsemble, hash_double(tau));
  return ensemble_predict(model, y_padded, tau, cfg.ensemble_size, rng);
}

RunResult run_fixed(const Image& y, double tau, bool shuffle, const MashConfig& cfg,
                    const RunOptions& options) {
  cfg.validate();
  if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("masking ratio must lie in [0, 1]");
  const auto start = std::chrono::steady_clock::now();
  const Image padded = pad_for_net(y, net_config_for(cfg, y.channels()));
  TrainedRun run = train_fixed(padded, tau, cfg.iterations, shuffle, cfg);

  RunResult result;
  result.denoised = crop_back(ensemble_output(run.model, padded, tau, cfg), y);
  result.report = base_report(y, cfg, options);
  result.report.tau = tau;
  result.report.shuffle_enabled = shuffle;
  if (run.flatness) result.report.flat_fraction = run.flatness->flat_fraction();
  result.report.final_run = std::move(run.trace);
  result.flatness = std::move(run.flatness);
  result.shuffled = std::move(run.shuffled);
  finish_report(result.report, result.denoised, options, start);
  return result;
}

RunResult run_baseline(const Image& y, double tau, const MashConfig& cfg,
                       const RunOptions& options) {
  return run_fixed(y, tau, false, cfg, options);
}

namespace {

struct WarmupPair {
  TrainedRun low;
  TrainedRun high;
};

WarmupPair run_warmups(const Image& padded, const MashConfig& cfg, int threads) {
  WarmupPair w;
  if (threads > 1) {
    auto high = std::async(std::launch::async, [&] {
      return train_fixed(padded, cfg.tau_high, cfg.warmup_iterations, false, cfg);
    });
    w.low = train_fixed(padded, cfg.tau_low, cfg.warmup_iterations, false, cfg);
    w.high = high.get();
  } else {
    w.low = train_fixed(padded, cfg.tau_low, cfg.warmup_iterations, false, cfg);
    w.high = train_fixed(padded, cfg.tau_high, cfg.warmup_iterations, false, cfg);
  }
  return w;
}

GapReport gap_from(const TrainingTrace& low, const TrainingTrace& high, const MashConfig& cfg) {
  GapReport gap;
  gap.sigma_low = low.converged_sigma(cfg.sigma_window);
  gap.sigma_high = high.converged_sigma(cfg.sigma_window);
  gap.epsilon = estimation_gap(gap.sigma_high, gap.sigma_low);
  const TauSelection sel = select_tau(gap.epsilon, cfg);
  gap.tau_optimal = sel.tau;
  gap.shuffle_enabled = sel.shuffle_enabled;
  gap.seed = cfg.seed;
  return gap;
}

}  // namespace

GapEstimate estimate_gap(const Image& y, const MashConfig& cfg, int threads) {
  cfg.validate();
  const Image padded = pad_for_net(y, net_config_for(cfg, y.channels()));
  WarmupPair w = run_warmups(padded, cfg, threads);
  GapEstimate e;
  e.gap = gap_from(w.low.trace, w.high.trace, cfg);
  e.low = std::move(w.low.trace);
  e.high = std::move(w.high.trace);
  return e;
}

RunResult run_mash(const Image& y, const MashConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Image padded = pad_for_net(y, net_config_for(cfg, y.channels()));
  WarmupPair warm = run_warmups(padded, cfg, options.threads);
  const GapReport gap = gap_from(warm.low.trace, warm.high.trace, cfg);
  TrainingTrace low_trace = warm.low.trace;
  TrainingTrace high_trace = warm.high.trace;

  // Training is a pure function of (seed, tau, iterations, shuffle): when
  // the final run would repeat a warm-up exactly, that warm-up is reused.
  TrainedRun final_run;
  const bool same_length = cfg.warmup_iterations == cfg.iterations;
  if (same_length && !gap.shuffle_enabled && gap.tau_optimal == cfg.tau_low) {
    final_run = std::move(warm.low);
  } else if (same_length && !gap.shuffle_enabled && gap.tau_optimal == cfg.tau_high) {
    final_run = std::move(warm.high);
  } else {
    final_run = train_fixed(padded, gap.tau_optimal, cfg.iterations, gap.shuffle_enabled, cfg);
  }

  RunResult result;
  result.denoised = crop_back(ensemble_output(final_run.model, padded, gap.tau_optimal, cfg), y);
  result.report = base_report(y, cfg, options);
  result.report.gap = gap;
  result.report.tau = gap.tau_optimal;
  result.report.shuffle_enabled = gap.shuffle_enabled;
  if (final_run.flatness) result.report.flat_fraction = final_run.flatness->flat_fraction();
  result.report.warmup_low = std::move(low_trace);
  result.report.warmup_high = std::move(high_trace);
  result.report.final_run = final_run.trace;
  result.flatness = std::move(final_run.flatness);
  result.shuffled = std::move(final_run.shuffled);
  finish_report(result.report, result.denoised, options, start);
  return result;
}

void write_run_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_image(result.denoised, dir / "denoised.rawf32", ImageFormat::kRawF32);
  save_image(result.denoised, dir / "denoised.png", ImageFormat::kPng8);
  const RunReport& r = result.report;
  if (r.gap) {
    std::ofstream gap(dir / "gap.txt");
    gap << r.gap->to_record();
    if (!gap) throw IoError("cannot write gap.txt");
  }

  std::ofstream trace(dir / "trace.csv");
  trace << std::setprecision(9);
  trace << "phase,tau,iteration,loss,sigma_hat\n";
  auto dump = [&trace](const char* phase, const TrainingTrace& t) {
    for (std::size_t i = 0; i < t.loss.size(); ++i) {
      trace << phase << ',' << t.tau << ',' << i + 1 << ',' << t.loss[i] << ',' << t.sigma_hat[i]
            << '\n';
    }
  };
  if (r.gap) {
    dump("warmup_low", r.warmup_low);
    dump("warmup_high", r.warmup_high);
  }
  dump("final", r.final_run);
  if (!trace) throw IoError("cannot write trace.csv");

  std::ofstream rep(dir / "report.txt");
  rep << std::setprecision(10);
  rep << "input=" << r.input_name << '\n'
      << "shape=" << r.height << 'x' << r.width << 'x' << r.channels << '\n';
  if (r.noise) {
    rep << "noise_sigma=" << r.noise->sigma << '\n'
        << "noise_beta=" << r.noise->beta << '\n'
        << "noise_kernel_width=" << r.noise->kernel_width << '\n';
  }
  rep << "tau=" << r.tau << '\n'
      << "shuffle_enabled=" << (r.shuffle_enabled ? "true" : "false") << '\n'
      << "flat_fraction=" << r.flat_fraction << '\n'
      << "converged_sigma=" << r.final_run.converged_sigma(r.config.sigma_window) << '\n';
  if (r.metrics) rep << "psnr=" << r.metrics->psnr << '\n' << "ssim=" << r.metrics->ssim << '\n';
  rep << "seed=" << r.seed << '\n' << "wall_clock=" << r.wall_clock_seconds << '\n';
  if (!rep) throw IoError("cannot write report.txt");

  if (result.flatness) {
    save_image(result.flatness->to_image(), dir / "flatness.png", ImageFormat::kPng8);
  }
  if (result.shuffled) save_image(*result.shuffled, dir / "shuffled.rawf32", ImageFormat::kRawF32);
}

}  // namespace mash
