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

#include "mash/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <limits>
#include <thread>
#include <tuple>

#include "mash/config.hpp"
#include "mash/error.hpp"
#include "mash/pipeline.hpp"
#include "mash/rng.hpp"

namespace mash {

namespace {

std::uint64_t hash_image(const Image& img) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const int dims[3] = {img.height(), img.width(), img.channels()};
  mix(dims, sizeof(dims));
  mix(img.data().data(), img.size() * sizeof(float));
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

std::string serialize(const CellResult& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "ok=" << r.ok << "\n";
  out << "psnr=" << r.psnr << "\n";
  out << "ssim=" << r.ssim << "\n";
  out << "converged_sigma=" << r.converged_sigma << "\n";
  out << "sigma_trace=";
  for (std::size_t i = 0; i < r.sigma_trace.size(); ++i) {
    if (i) out << ',';
    out << r.sigma_trace[i];
  }
  out << "\n";
  return out.str();
}

std::optional<CellResult> deserialize(const std::string& text) {
  const auto kv = parse_key_values(text);
  const char* needed[] = {"ok", "psnr", "ssim", "converged_sigma", "sigma_trace"};
  for (const char* k : needed) {
    if (!kv.count(k)) return std::nullopt;
  }
  CellResult r;
  try {
    r.ok = kv.at("ok") == "1";
    r.psnr = std::stod(kv.at("psnr"));
    r.ssim = std::stod(kv.at("ssim"));
    r.converged_sigma = std::stod(kv.at("converged_sigma"));
    std::istringstream trace(kv.at("sigma_trace"));
    std::string item;
    while (std::getline(trace, item, ',')) {
      if (!item.empty()) r.sigma_trace.push_back(std::stod(item));
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (!r.ok) return std::nullopt;
  return r;
}

void report(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

}  // namespace

std::vector<ExperimentImage> load_experiment_images(const std::vector<std::string>& paths,
                                                    int crop_size) {
  if (crop_size < 1) throw UsageError("crop size must be positive");
  std::vector<ExperimentImage> out;
  out.reserve(paths.size());
  for (const auto& p : paths) {
    Image img = load_image(p);
    if (img.height() < crop_size || img.width() < crop_size) {
      throw UsageError("image " + p + " is smaller than the crop size");
    }
    const int r0 = (img.height() - crop_size) / 2;
    const int c0 = (img.width() - crop_size) / 2;
    out.push_back({std::filesystem::path(p).stem().string(),
                   crop(img, r0, c0, crop_size, crop_size)});
  }
  return out;
}

Image make_noisy(const ExperimentImage& image, const NoiseModel& noise, std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kNoise, hash_string(image.name));
  return add_noise(image.clean, noise, rng);
}

RunCache::RunCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::optional<CellResult> RunCache::find(const std::string& key) {
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(key); it != memory_.end()) {
    ++hits_;
    return it->second;
  }
  if (!dir_.empty()) {
    std::ifstream in(dir_ / (hex(hash_string(key)) + ".cell"));
    std::string first;
    if (in && std::getline(in, first) && first == key) {
      std::ostringstream rest;
      rest << in.rdbuf();
      if (auto r = deserialize(rest.str())) {
        memory_.emplace(key, *r);
        ++hits_;
        return r;
      }
    }
  }
  ++misses_;
  return std::nullopt;
}

void RunCache::store(const std::string& key, const CellResult& result) {
  if (!result.ok) return;
  std::lock_guard lock(mutex_);
  memory_[key] = result;
  if (dir_.empty()) return;
  const auto path = dir_ / (hex(hash_string(key)) + ".cell");
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) return;
    out << key << "\n" << serialize(result);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
}

std::string cell_key(const CellSpec& spec, const MashConfig& cfg) {
  // Fields that do not influence a fixed-ratio run are normalised so that a
  // warm-up and a baseline of equal length share one entry.
  MashConfig k = cfg;
  k.iterations = spec.iterations;
  k.warmup_iterations = 0;
  k.tau_low = k.tau_medium = k.tau_high = 0.0;
  k.eps_low = k.eps_high = 0.0;
  if (!spec.shuffle) {
    k.shuffle_start = 0;
    k.tile_size = 0;
    k.flat_threshold = 0.0;
  }
  std::ostringstream out;
  out << std::setprecision(17) << "v1|" << hex(hash_image(*spec.noisy)) << '|'
      << (spec.clean ? hex(hash_image(*spec.clean)) : std::string("none")) << "|tau" << spec.tau
      << "|lps" << spec.shuffle << '|' << fingerprint(k);
  return out.str();
}

CellResult run_cell(const CellSpec& spec, const MashConfig& cfg, RunCache* cache) {
  if (spec.noisy == nullptr) throw UsageError("cell without an input image");
  const std::string key = cell_key(spec, cfg);
  if (cache) {
    if (auto hit = cache->find(key)) return *hit;
  }
  CellResult r;
  try {
    MashConfig run_cfg = cfg;
    run_cfg.iterations = spec.iterations;
    run_cfg.shuffle_start = std::min(run_cfg.shuffle_start, std::max(spec.iterations - 1, 0));
    RunOptions opts;
    opts.name = spec.name;
    opts.clean = spec.clean;
    const RunResult run = run_fixed(*spec.noisy, spec.tau, spec.shuffle, run_cfg, opts);
    r.sigma_trace = run.report.final_run.sigma_hat;
    r.converged_sigma = run.report.final_run.converged_sigma(cfg.sigma_window);
    if (run.report.metrics) {
      r.psnr = run.report.metrics->psnr;
      r.ssim = run.report.metrics->ssim;
    }
    r.ok = true;
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  if (cache && r.ok) cache->store(key, r);
  return r;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void SweepSpec::validate() const {
  if (images.empty()) throw UsageError("sweep needs at least one image");
  if (tau_grid.empty() || beta_grid.empty() || lps_flags.empty()) {
    throw UsageError("sweep grids must be non-empty");
  }
  if (repetitions < 1) throw UsageError("repetitions must be at least 1");
  for (double t : tau_grid) {
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("masking ratio must lie in [0, 1]");
  }
  for (double b : beta_grid) {
    NoiseModel m{sigma, b, kernel_width, norm};
    m.validate();
  }
}

std::string SweepTable::to_csv() const {
  std::ostringstream out;
  out << "image,tau,beta,seed,lps,psnr,ssim,sigma_hat\n";
  for (const auto& r : rows) {
    out << r.image << ',' << fmt(r.tau) << ',' << fmt(r.beta) << ',' << r.seed << ','
        << (r.lps ? 1 : 0) << ',' << fmt(r.result.psnr) << ',' << fmt(r.result.ssim) << ','
        << fmt(r.result.converged_sigma) << '\n';
  }
  return out.str();
}

std::string SweepTable::failures_csv() const {
  std::ostringstream out;
  out << "image,tau,beta,seed,lps,error\n";
  for (const auto& r : failures) {
    std::string msg = r.result.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << r.image << ',' << fmt(r.tau) << ',' << fmt(r.beta) << ',' << r.seed << ','
        << (r.lps ? 1 : 0) << ',' << msg << '\n';
  }
  return out.str();
}

SweepTable sweep(const SweepSpec& spec, const MashConfig& cfg, int threads, RunCache* cache,
                 const ProgressFn& progress) {
  spec.validate();
  cfg.validate();

  struct Job {
    std::size_t image;
    double tau;
    double beta;
    int rep;
    bool lps;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < spec.images.size(); ++i) {
    for (double beta : spec.beta_grid) {
      for (int rep = 0; rep < spec.repetitions; ++rep) {
        for (bool lps : spec.lps_flags) {
          for (double tau : spec.tau_grid) jobs.push_back({i, tau, beta, rep, lps});
        }
      }
    }
  }

  // Noisy inputs depend on (image, beta, repetition); build each once.
  std::map<std::tuple<std::size_t, double, int>, Image> noisy;
  for (const auto& j : jobs) {
    const auto key = std::make_tuple(j.image, j.beta, j.rep);
    if (noisy.count(key)) continue;
    const NoiseModel model{spec.sigma, j.beta, spec.kernel_width, spec.norm};
    noisy.emplace(key, make_noisy(spec.images[j.image], model,
                                  cfg.seed + static_cast<std::uint64_t>(j.rep)));
  }

  std::vector<SweepRow> rows(jobs.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(jobs.size(), threads, [&](std::size_t n) {
    const Job& j = jobs[n];
    MashConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(j.rep);
    CellSpec cell;
    cell.name = spec.images[j.image].name;
    cell.noisy = &noisy.at(std::make_tuple(j.image, j.beta, j.rep));
    cell.clean = &spec.images[j.image].clean;
    cell.tau = j.tau;
    cell.shuffle = j.lps;
    cell.iterations = cfg.iterations;
    SweepRow& row = rows[n];
    row.image = cell.name;
    row.tau = j.tau;
    row.beta = j.beta;
    row.seed = c.seed;
    row.lps = j.lps;
    row.result = run_cell(cell, c, cache);
    const std::size_t k = ++done;
    std::lock_guard lock(progress_mutex);
    report(progress, "sweep " + std::to_string(k) + "/" + std::to_string(jobs.size()) + " " +
                         row.image + " tau=" + fmt(j.tau) + " beta=" + fmt(j.beta) +
                         (row.result.ok ? " psnr=" + fmt(row.result.psnr)
                                        : " failed: " + row.result.error));
  });

  SweepTable table;
  for (auto& r : rows) (r.result.ok ? table.rows : table.failures).push_back(std::move(r));
  return table;
}

namespace {

// Mean PSNR per tau over (image, seed) rows with the given beta and lps.
std::map<double, double> psnr_by_tau(const SweepTable& table, double beta, bool lps) {
  std::map<double, std::pair<double, int>> acc;
  for (const auto& r : table.rows) {
    if (r.beta != beta || r.lps != lps) continue;
    auto& a = acc[r.tau];
    a.first += r.result.psnr;
    a.second += 1;
  }
  std::map<double, double> out;
  for (const auto& [tau, a] : acc) out[tau] = a.first / a.second;
  return out;
}

}  // namespace

double mean_argmax_tau(const SweepTable& table, double beta, bool lps) {
  // Argmax per (image, seed), then averaged.
  std::map<std::pair<std::string, std::uint64_t>, std::pair<double, double>> best;
  for (const auto& r : table.rows) {
    if (r.beta != beta || r.lps != lps) continue;
    auto key = std::make_pair(r.image, r.seed);
    auto it = best.find(key);
    if (it == best.end() || r.result.psnr > it->second.second) {
      best[key] = {r.tau, r.result.psnr};
    }
  }
  if (best.empty()) throw UsageError("no sweep rows for the requested beta");
  double sum = 0.0;
  for (const auto& [k, v] : best) sum += v.first;
  return sum / static_cast<double>(best.size());
}

double best_psnr_mean(const SweepTable& table, double beta, bool lps) {
  const auto m = psnr_by_tau(table, beta, lps);
  if (m.empty()) throw UsageError("no sweep rows for the requested beta");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [tau, p] : m) best = std::max(best, p);
  return best;
}

double mean_psnr(const SweepTable& table, double beta, double tau, bool lps) {
  const auto m = psnr_by_tau(table, beta, lps);
  auto it = m.find(tau);
  if (it == m.end()) throw UsageError("no sweep rows for the requested cell");
  return it->second;
}

std::vector<double> argmax_ratios(const std::map<double, double>& psnr_by_tau) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [tau, p] : psnr_by_tau) best = std::max(best, p);
  std::vector<double> out;
  for (const auto& [tau, p] : psnr_by_tau) {
    if (p == best) out.push_back(tau);
  }
  return out;
}

std::string AuditReport::to_csv() const {
  std::ostringstream out;
  out << "image,psnr_low,psnr_medium,psnr_high,best_tau,sigma_low,sigma_high,epsilon,"
         "tau_optimal,success\n";
  for (const auto& c : cells) {
    out << c.name;
    for (const auto& [tau, p] : c.psnr_by_tau) out << ',' << fmt(p);
    std::string best;
    for (std::size_t i = 0; i < c.best_taus.size(); ++i) {
      if (i) best += ';';
      best += fmt(c.best_taus[i]);
    }
    out << ',' << best << ',' << fmt(c.gap.sigma_low) << ',' << fmt(c.gap.sigma_high) << ','
        << fmt(c.gap.epsilon) << ',' << fmt(c.gap.tau_optimal) << ',' << (c.success ? 1 : 0)
        << '\n';
  }
  return out.str();
}

AuditReport masking_accuracy_audit(const std::vector<AuditInput>& inputs, const MashConfig& cfg,
                                   int threads, RunCache* cache, const ProgressFn& progress) {
  if (inputs.empty()) throw UsageError("masking audit needs at least one input");
  cfg.validate();
  const double taus[3] = {cfg.tau_low, cfg.tau_medium, cfg.tau_high};

  // Per input: three baselines plus two warm-ups.
  struct Job {
    std::size_t input;
    double tau;
    bool warmup;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (double t : taus) jobs.push_back({i, t, false});
    jobs.push_back({i, cfg.tau_low, true});
    jobs.push_back({i, cfg.tau_high, true});
  }
  std::vector<CellResult> results(jobs.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(jobs.size(), threads, [&](std::size_t n) {
    const Job& j = jobs[n];
    CellSpec cell;
    cell.name = inputs[j.input].name;
    cell.noisy = &inputs[j.input].noisy;
    cell.clean = &inputs[j.input].clean;
    cell.tau = j.tau;
    cell.iterations = j.warmup ? cfg.warmup_iterations : cfg.iterations;
    results[n] = run_cell(cell, cfg, cache);
    const std::size_t k = ++done;
    std::lock_guard lock(progress_mutex);
    report(progress, "audit " + std::to_string(k) + "/" + std::to_string(jobs.size()) + " " +
                         cell.name + (j.warmup ? " warm-up" : " baseline") +
                         " tau=" + fmt(j.tau));
  });

  AuditReport out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const CellResult* r = &results[i * 5];
    for (int k = 0; k < 5; ++k) {
      if (!r[k].ok) throw NumericalError("audit run failed for " + inputs[i].name + ": " + r[k].error);
    }
    AuditCell cell;
    cell.name = inputs[i].name;
    for (int k = 0; k < 3; ++k) cell.psnr_by_tau[taus[k]] = r[k].psnr;
    cell.best_taus = argmax_ratios(cell.psnr_by_tau);
    cell.gap.sigma_low = r[3].converged_sigma;
    cell.gap.sigma_high = r[4].converged_sigma;
    cell.gap.epsilon = estimation_gap(cell.gap.sigma_high, cell.gap.sigma_low);
    const TauSelection sel = select_tau(cell.gap.epsilon, cfg);
    cell.gap.tau_optimal = sel.tau;
    cell.gap.shuffle_enabled = sel.shuffle_enabled;
    cell.gap.seed = cfg.seed;
    cell.success = std::find(cell.best_taus.begin(), cell.best_taus.end(), sel.tau) !=
                   cell.best_taus.end();
    out.successes += cell.success ? 1 : 0;
    out.cells.push_back(std::move(cell));
  }
  out.accuracy = static_cast<double>(out.successes) / static_cast<double>(out.cells.size());
  return out;
}

double GapCurves::mean_epsilon(double beta) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : summaries) {
    if (s.beta == beta) {
      sum += s.gap.epsilon;
      ++n;
    }
  }
  if (n == 0) throw UsageError("no gap curves for the requested beta");
  return sum / n;
}

std::string GapCurves::traces_csv() const {
  std::ostringstream out;
  out << "image,beta,tau,iteration,sigma_hat\n";
  for (const auto& t : traces) {
    for (std::size_t i = 0; i < t.sigma_hat.size(); ++i) {
      out << t.image << ',' << fmt(t.beta) << ',' << fmt(t.tau) << ',' << i << ','
          << fmt(t.sigma_hat[i]) << '\n';
    }
  }
  return out.str();
}

std::string GapCurves::summary_csv() const {
  std::ostringstream out;
  out << "image,beta,sigma_low,sigma_high,epsilon,tau_optimal,shuffle_enabled\n";
  for (const auto& s : summaries) {
    out << s.image << ',' << fmt(s.beta) << ',' << fmt(s.gap.sigma_low) << ','
        << fmt(s.gap.sigma_high) << ',' << fmt(s.gap.epsilon) << ',' << fmt(s.gap.tau_optimal)
        << ',' << (s.gap.shuffle_enabled ? 1 : 0) << '\n';
  }
  return out.str();
}

GapCurves gap_curves(const std::vector<ExperimentImage>& images, const std::vector<double>& betas,
                     const NoiseModel& base_noise, const MashConfig& cfg, int threads,
                     RunCache* cache, const ProgressFn& progress) {
  if (images.empty() || betas.empty()) throw UsageError("gap curves need images and betas");
  cfg.validate();
  std::vector<AuditInput> inputs;
  std::vector<std::pair<std::size_t, double>> origin;
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (double beta : betas) {
      NoiseModel m = base_noise;
      m.beta = beta;
      m.validate();
      inputs.push_back({images[i].name, make_noisy(images[i], m, cfg.seed), images[i].clean});
      origin.emplace_back(i, beta);
    }
  }
  const double taus[2] = {cfg.tau_low, cfg.tau_high};
  std::vector<CellResult> results(inputs.size() * 2);
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(results.size(), threads, [&](std::size_t n) {
    const AuditInput& in = inputs[n / 2];
    CellSpec cell;
    cell.name = in.name;
    cell.noisy = &in.noisy;
    cell.clean = &in.clean;
    cell.tau = taus[n % 2];
    cell.iterations = cfg.warmup_iterations;
    results[n] = run_cell(cell, cfg, cache);
    const std::size_t k = ++done;
    std::lock_guard lock(progress_mutex);
    report(progress, "gap " + std::to_string(k) + "/" + std::to_string(results.size()) + " " +
                         in.name + " beta=" + fmt(origin[n / 2].second) + " tau=" + fmt(cell.tau));
  });

  GapCurves out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const CellResult& lo = results[2 * i];
    const CellResult& hi = results[2 * i + 1];
    if (!lo.ok || !hi.ok) {
      throw NumericalError("warm-up failed for " + inputs[i].name + ": " +
                           (lo.ok ? hi.error : lo.error));
    }
    const double beta = origin[i].second;
    out.traces.push_back({inputs[i].name, beta, taus[0], lo.sigma_trace});
    out.traces.push_back({inputs[i].name, beta, taus[1], hi.sigma_trace});
    GapCurveSummary s;
    s.image = inputs[i].name;
    s.beta = beta;
    s.gap.sigma_low = lo.converged_sigma;
    s.gap.sigma_high = hi.converged_sigma;
    s.gap.epsilon = estimation_gap(s.gap.sigma_high, s.gap.sigma_low);
    const TauSelection sel = select_tau(s.gap.epsilon, cfg);
    s.gap.tau_optimal = sel.tau;
    s.gap.shuffle_enabled = sel.shuffle_enabled;
    s.gap.seed = cfg.seed;
    out.summaries.push_back(s);
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace mash
