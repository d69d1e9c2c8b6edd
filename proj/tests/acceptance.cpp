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

// Acceptance suite. Prints one PASS/FAIL line per criterion. Exit status: 0
// when every selected criterion passes, 77 when the only failures are listed
// with --known-fail, 1 otherwise.

#include <algorithm>
#include <array>
#include <bit>
#include <memory>
#include <random>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mash/bsd.hpp"
#include "mash/config.hpp"
#include "mash/harness.hpp"
#include "mash/image.hpp"
#include "mash/net.hpp"
#include "mash/noise.hpp"
#include "mash/pipeline.hpp"
#include "mash/rng.hpp"
#include "mash/shuffle.hpp"

namespace fs = std::filesystem;
using namespace mash;

namespace {

struct Options {
  std::string cli;
  std::string data;
  std::string work;
  std::string cache;
  std::string known_fail;
  int threads = 1;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out << std::setprecision(precision) << v;
  return out.str();
}

Rng test_rng(std::uint64_t index) { return make_rng(2026, Stream::kTest, index); }

// 1: sampler covariance fidelity.
Outcome noise_fidelity(const Options&) {
  constexpr int kDraws = 200000;
  constexpr double kVar = 625.0;
  double worst_exact = 0.0;
  double worst_fast = 0.0;
  for (double beta : {0.0, 0.5, 1.0}) {
    const NoiseModel m{25.0, beta, 3.0};
    const ExactNoiseSampler exact(m, 6, 6);
    const FastNoiseSampler fast(m, 6, 6);
    CovarianceAccumulator ce(6, 6), cf(6, 6);
    Rng re = test_rng(100 + static_cast<std::uint64_t>(beta * 10));
    Rng rf = test_rng(200 + static_cast<std::uint64_t>(beta * 10));
    for (int s = 0; s < kDraws; ++s) ce.add(exact.sample(1, re));
    // Channels of one fast draw are independent fields.
    for (int s = 0; s < kDraws; s += 3) {
      const Image triple = fast.sample(3, rf);
      for (int c = 0; c < 3 && s + c < kDraws; ++c) {
        Image field(6, 6, 1);
        for (std::size_t p = 0; p < 36; ++p) field[p] = triple[3 * p + c];
        cf.add(field);
      }
    }
    const Eigen::MatrixXd ref = exact.covariance().entries;
    const Eigen::MatrixXd emp_exact = ce.covariance();
    const Eigen::MatrixXd emp_fast = cf.covariance();
    worst_exact = std::max(worst_exact, (emp_exact - ref).cwiseAbs().maxCoeff() / kVar);
    worst_fast = std::max(worst_fast, (emp_fast - emp_exact).cwiseAbs().maxCoeff() / kVar);
  }
  return {worst_exact < 0.03 && worst_fast < 0.05,
          "exact vs repaired max |diff| = " + fmt(worst_exact) + " sigma^2 (< 0.03), fast vs exact = " +
              fmt(worst_fast) + " sigma^2 (< 0.05)"};
}

template <typename T>
std::vector<std::size_t> branch_pattern(const Workspace<T>& ws) {
  std::vector<std::size_t> p;
  for (const auto& a : ws.activations) {
    for (T v : a.values) p.push_back(v > T(0) ? 1 : 0);
  }
  for (const auto& am : ws.argmax) p.insert(p.end(), am.begin(), am.end());
  return p;
}

struct FdStats {
  double worst = 0.0;
  int checked = 0;
  int skipped = 0;
};

// Central differences on uniformly sampled parameters of the reduced net at
// 8x8. A sample whose +h and -h evaluations take different activation or
// pooling branches straddles a kink and is replaced by another.
template <typename T>
FdStats fd_error(int wanted) {
  const NetConfig cfg = NetConfig::reduced_variant(3);
  Rng irng = test_rng(300);
  auto model = init_model<T>(cfg, irng);
  Rng drng = test_rng(301);
  std::uniform_real_distribution<float> u(0.0f, 255.0f);
  Image x(8, 8, 3), t(8, 8, 3), w(8, 8, 3);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = u(drng);
    w[i] = coin(drng) ? 1.0f : 0.0f;
  }
  // Target a few intensity units from the current output.
  t = forward(model, x);
  std::normal_distribution<float> jitter(0.0f, 2.0f);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += jitter(drng);
  Workspace<T> ws;
  std::vector<T> grads;
  loss_and_grads(model, x, t, w, ws, grads);
  // Central differences in double on the same parameter values.
  DenoiserModel<double> ref{model.config, model.layers,
                            {model.parameters.begin(), model.parameters.end()}};
  Workspace<double> ref_ws;
  std::vector<double> scratch;
  std::uniform_int_distribution<std::size_t> pick(0, model.parameters.size() - 1);
  const double h = 1e-3;
  FdStats st;
  while (st.checked < wanted && st.skipped < 10 * wanted) {
    const std::size_t p = pick(drng);
    const double orig = ref.parameters[p];
    ref.parameters[p] = orig + h;
    const double up = loss_and_grads(ref, x, t, w, ref_ws, scratch);
    const auto branch_up = branch_pattern(ref_ws);
    ref.parameters[p] = orig - h;
    const double down = loss_and_grads(ref, x, t, w, ref_ws, scratch);
    const auto branch_down = branch_pattern(ref_ws);
    ref.parameters[p] = orig;
    if (branch_up != branch_down) {
      ++st.skipped;
      continue;
    }
    const double fd = (up - down) / (2 * h);
    const double an = grads[p];
    st.worst = std::max(st.worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3}));
    ++st.checked;
  }
  return st;
}

// 2: analytic gradients vs central differences.
Outcome gradient_exactness(const Options&) {
  const FdStats f = fd_error<float>(64);
  const FdStats d = fd_error<double>(64);
  return {f.checked >= 50 && d.checked >= 50 && f.worst < 1e-2 && d.worst < 1e-5,
          std::to_string(f.checked) + "/" + std::to_string(d.checked) +
              " parameters (float/double, kink-straddling draws replaced: " +
              std::to_string(f.skipped) + "/" + std::to_string(d.skipped) +
              "), max relative error float " + fmt(f.worst) + " (< 1e-2), double " +
              fmt(d.worst) + " (< 1e-5)"};
}

// Shared state of the desk-scale criteria.
struct DeskContext {
  MashConfig cfg;
  std::vector<ExperimentImage> images;
  std::unique_ptr<RunCache> cache;
  SweepTable table;
  bool swept = false;
};

DeskContext& desk(const Options& o) {
  static DeskContext ctx;
  if (!ctx.cache) {
    ctx.cfg = MashConfig::desk_preset();
    ctx.images = load_experiment_images(
        {o.data + "/astronaut.png", o.data + "/coffee.png", o.data + "/chelsea.png"}, 128);
    ctx.cache = std::make_unique<RunCache>(o.cache);
  }
  return ctx;
}

ProgressFn progress() {
  return [](const std::string& msg) { std::cerr << "  " << msg << std::endl; };
}

const SweepTable& desk_sweep(const Options& o) {
  DeskContext& d = desk(o);
  if (!d.swept) {
    SweepSpec spec;
    spec.images = d.images;
    spec.tau_grid = {0.1, 0.2, 0.3, 0.5, 0.7, 0.8};
    spec.beta_grid = {0.0, 1.0};
    d.table = sweep(spec, d.cfg, o.threads, d.cache.get(), progress());
    write_text_file(fs::path(o.work) / "desk_sweep.csv", d.table.to_csv());
    d.swept = true;
  }
  return d.table;
}

// 3: PSNR-optimal ratio by correlation regime.
Outcome masking_ratio_trend(const Options& o) {
  const SweepTable& t = desk_sweep(o);
  if (!t.failures.empty()) return {false, std::to_string(t.failures.size()) + " sweep cells failed"};
  const double a0 = mean_argmax_tau(t, 0.0, false);
  const double a1 = mean_argmax_tau(t, 1.0, false);
  const double b0 = best_psnr_mean(t, 0.0, false);
  const double b1 = best_psnr_mean(t, 1.0, false);
  return {a0 <= 0.3 && a1 >= 0.6 && b0 - b1 >= 2.0,
          "mean argmax tau beta=0: " + fmt(a0) + " (<= 0.3), beta=1: " + fmt(a1) +
              " (>= 0.6); best PSNR gap " + fmt(b0 - b1) + " dB (>= 2)"};
}

// 4: gap ordering across correlation levels.
Outcome gap_ordering(const Options& o) {
  DeskContext& d = desk(o);
  const GapCurves g = gap_curves(d.images, {0.0, 0.5, 1.0}, NoiseModel{25.0, 0.0, 3.0}, d.cfg,
                                 o.threads, d.cache.get(), progress());
  write_text_file(fs::path(o.work) / "desk_gap_traces.csv", g.traces_csv());
  write_text_file(fs::path(o.work) / "desk_gap_summary.csv", g.summary_csv());
  const double e0 = g.mean_epsilon(0.0), e5 = g.mean_epsilon(0.5), e1 = g.mean_epsilon(1.0);
  return {e0 < e5 && e5 < e1, "mean epsilon beta=0: " + fmt(e0) + ", beta=0.5: " + fmt(e5) +
                                  ", beta=1: " + fmt(e1) + " (strictly increasing)"};
}

// 5: gap-based selection against the empirical best ratio.
Outcome selection_accuracy(const Options& o) {
  DeskContext& d = desk(o);
  std::vector<AuditInput> inputs;
  for (const auto& img : d.images) {
    for (double beta : {0.0, 1.0}) {
      inputs.push_back({img.name + "@beta=" + fmt(beta),
                        make_noisy(img, NoiseModel{25.0, beta, 3.0}, d.cfg.seed), img.clean});
    }
  }
  const AuditReport a = masking_accuracy_audit(inputs, d.cfg, o.threads, d.cache.get(), progress());
  write_text_file(fs::path(o.work) / "desk_audit.csv", a.to_csv());
  return {a.successes >= 4, std::to_string(a.successes) + "/6 cells select a PSNR-optimal ratio (>= 4)"};
}

// 6: shuffling benefit under correlated noise.
Outcome shuffle_benefit(const Options& o) {
  DeskContext& d = desk(o);
  SweepSpec spec;
  spec.images = d.images;
  spec.tau_grid = {0.5, 0.8};
  spec.beta_grid = {1.0};
  spec.lps_flags = {false, true};
  const SweepTable t = sweep(spec, d.cfg, o.threads, d.cache.get(), progress());
  write_text_file(fs::path(o.work) / "desk_shuffle.csv", t.to_csv());
  if (!t.failures.empty()) return {false, std::to_string(t.failures.size()) + " cells failed"};
  bool pass = true;
  std::string detail;
  for (double tau : {0.5, 0.8}) {
    const double gain = mean_psnr(t, 1.0, tau, true) - mean_psnr(t, 1.0, tau, false);
    pass = pass && gain >= 0.3;
    detail += "tau=" + fmt(tau) + ": " + fmt(gain) + " dB; ";
  }
  return {pass, detail + "(each >= 0.3)"};
}

// 7: shuffling invariants and decorrelation.
Outcome shuffle_invariants(const Options&) {
  bool multiset_ok = true, fixed_ok = true, identity_ok = true;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng = test_rng(700 + seed);
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    // Pseudo-clean with flat blocks and textured blocks.
    Image pseudo(32, 32, 3);
    for (int r = 0; r < 32; ++r) {
      for (int c = 0; c < 32; ++c) {
        const bool textured = ((r / 4) + (c / 4) + seed) % 3 == 0;
        for (int ch = 0; ch < 3; ++ch) pseudo.at(r, c, ch) = textured ? u(rng) : 100.0f;
      }
    }
    Image y(32, 32, 3);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = u(rng);
    const FlatnessMap f = flatness_map(pseudo, 4, 5.0);
    const Image s = local_shuffle(y, f, seed).image;
    for (int tr = 0; tr < 8; ++tr) {
      for (int tc = 0; tc < 8; ++tc) {
        std::vector<std::array<float, 3>> a, b;
        for (int r = tr * 4; r < tr * 4 + 4; ++r) {
          for (int c = tc * 4; c < tc * 4 + 4; ++c) {
            a.push_back({y.at(r, c, 0), y.at(r, c, 1), y.at(r, c, 2)});
            b.push_back({s.at(r, c, 0), s.at(r, c, 1), s.at(r, c, 2)});
            if (!f.is_flat(r, c)) {
              for (int ch = 0; ch < 3; ++ch) {
                fixed_ok = fixed_ok && std::bit_cast<std::uint32_t>(s.at(r, c, ch)) ==
                                           std::bit_cast<std::uint32_t>(y.at(r, c, ch));
              }
            }
          }
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        multiset_ok = multiset_ok && a == b;
      }
    }
    const FlatnessMap none = flatness_map(y, 4, 1e-6);
    identity_ok = identity_ok && none.flat_fraction() == 0.0 && local_shuffle(y, none, seed).image == y;
  }

  // Lag-1 autocovariance of beta = 1 noise inside flat tiles, over 10^4 seeds.
  constexpr int kSeeds = 10000;
  constexpr int kSize = 32;
  constexpr int kTile = 4;
  const NoiseModel m{25.0, 1.0, 3.0};
  const FastNoiseSampler sampler(m, kSize, kSize);
  const FlatnessMap flat = flatness_map(Image(kSize, kSize, 1, 128.0f), kTile, 5.0);
  double pre = 0.0, post = 0.0;
  std::size_t pairs = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng = make_rng(static_cast<std::uint64_t>(seed), Stream::kNoise);
    const Image n = sampler.sample(1, rng);
    const Image s = local_shuffle(n, flat, static_cast<std::uint64_t>(seed)).image;
    for (int r = 0; r < kSize; ++r) {
      for (int c = 0; c < kSize; ++c) {
        // Horizontal and vertical neighbours within the same tile.
        if ((c + 1) % kTile != 0) {
          pre += double(n.at(r, c, 0)) * n.at(r, c + 1, 0);
          post += double(s.at(r, c, 0)) * s.at(r, c + 1, 0);
          ++pairs;
        }
        if ((r + 1) % kTile != 0) {
          pre += double(n.at(r, c, 0)) * n.at(r + 1, c, 0);
          post += double(s.at(r, c, 0)) * s.at(r + 1, c, 0);
          ++pairs;
        }
      }
    }
  }
  pre /= static_cast<double>(pairs);
  post /= static_cast<double>(pairs);
  const double ratio = post / pre;
  const bool decorrelated = ratio < 0.2;
  return {multiset_ok && fixed_ok && identity_ok && decorrelated,
          std::string("multiset ") + (multiset_ok ? "ok" : "BROKEN") + ", non-flat " +
              (fixed_ok ? "ok" : "BROKEN") + ", identity " + (identity_ok ? "ok" : "BROKEN") +
              "; lag-1 autocovariance pre " + fmt(pre) + ", post " + fmt(post) + ", ratio " +
              fmt(ratio) + " (< 0.2)"};
}

// 8: small contracts.
Outcome unit_contracts(const Options&) {
  const MashConfig cfg;
  const double eps[4] = {1.5, 2.0, 2.5, 3.0};
  const double want[4] = {cfg.tau_low, cfg.tau_medium, cfg.tau_medium, cfg.tau_high};
  bool table_ok = true;
  for (int i = 0; i < 4; ++i) {
    const TauSelection s = select_tau(eps[i], cfg);
    table_ok = table_ok && s.tau == want[i] && s.shuffle_enabled == (i == 3);
  }
  Rng rng = test_rng(800);
  double worst_mask = 0.0;
  for (double tau : {0.2, 0.5, 0.8}) {
    const Mask mk = sample_mask(128, 128, 3, tau, rng);
    const double tol = 5.0 * std::sqrt(tau * (1 - tau) / (128.0 * 128.0 * 3.0));
    worst_mask = std::max(worst_mask, std::abs(mk.zero_fraction() - tau) / tol);
  }
  const Image a(32, 32, 3, 100.0f);
  const double p25 = psnr(a, Image(32, 32, 3, 125.0f));
  const double p10 = psnr(a, Image(32, 32, 3, 110.0f));
  const bool psnr_ok = std::abs(p25 - 20.17) < 0.005 && std::abs(p10 - 28.13) < 0.005;

  Rng irng = test_rng(801);
  const auto model = init_model<float>(NetConfig::reduced_variant(3), irng);
  Image y(16, 16, 3);
  std::uniform_real_distribution<float> u(0.0f, 255.0f);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = u(rng);
  const bool ensemble_ok = ensemble_predict(model, y, 0.0, 1, rng) == forward(model, y);
  return {table_ok && worst_mask <= 1.0 && psnr_ok && ensemble_ok,
          std::string("select_tau table ") + (table_ok ? "ok" : "WRONG") +
              ", mask deviation " + fmt(worst_mask) + " of 5-sigma bound, PSNR " + fmt(p25, 6) +
              "/" + fmt(p10, 6) + " dB, K=1 tau=0 ensemble " + (ensemble_ok ? "ok" : "WRONG")};
}

// 9: parameter budget.
Outcome model_size(const Options&) {
  const std::size_t n = parameter_count(NetConfig::standard(3));
  return {n >= 840000 && n <= 1140000, std::to_string(n) + " parameters (0.84M..1.14M)"};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string strip_wall_clock(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("wall_clock", 0) != 0) out += line + "\n";
  }
  return out;
}

int run_command(const std::string& cmd, const fs::path& log) {
  std::cerr << "  $ " << cmd << std::endl;
  return std::system((cmd + " >> \"" + log.string() + "\"").c_str());
}

// 10: end-to-end bitwise reproducibility through the command line tool.
Outcome reproducibility(const Options& o) {
  const fs::path work = fs::path(o.work) / "repro";
  fs::remove_all(work);
  fs::create_directories(work);
  const Image full = load_image(o.data + "/astronaut.png");
  save_image(crop(full, 32, 32, 64, 64), work / "clean.png", ImageFormat::kPng8);
  const auto start = std::chrono::steady_clock::now();
  const std::string q = "\"";
  if (run_command(q + o.cli + q + " synth --preset ci --seed 7 --sigma 25 --beta 1 --input " + q +
                  (work / "clean.png").string() + q + " --out-dir " + q + work.string() + q,
                  work / "cli.log") != 0) {
    return {false, "synth failed"};
  }
  for (const char* run : {"a", "b"}) {
    if (run_command(q + o.cli + q + " denoise -q --preset ci --seed 7 --input " + q +
                    (work / "noisy.rawf32").string() + q + " --clean " + q +
                    (work / "clean.png").string() + q + " --out-dir " + q + (work / run).string() +
                    q,
                    work / "cli.log") != 0) {
      return {false, std::string("denoise run ") + run + " failed"};
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::set<std::string> names;
  for (const char* run : {"a", "b"}) {
    for (const auto& e : fs::directory_iterator(work / run)) names.insert(e.path().filename().string());
  }
  std::vector<std::string> differing;
  for (const auto& n : names) {
    std::string a = read_file(work / "a" / n);
    std::string b = read_file(work / "b" / n);
    if (n == "report.txt") {
      a = strip_wall_clock(a);
      b = strip_wall_clock(b);
    }
    if (!fs::exists(work / "a" / n) || !fs::exists(work / "b" / n) || a != b) differing.push_back(n);
  }
  std::string detail = std::to_string(names.size()) + " output files compared, ";
  detail += differing.empty() ? "all identical" : std::to_string(differing.size()) + " differ";
  detail += "; " + fmt(seconds, 3) + " s total (< 300)";
  return {differing.empty() && seconds < 300.0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MASH acceptance suite"};
  Options o;
  std::vector<int> criteria;
  app.add_option("--criterion", criteria, "criteria to run (default: all)");
  app.add_option("--cli", o.cli, "path to mash_cli");
  app.add_option("--data", o.data, "directory with the test crops")->required();
  app.add_option("--work", o.work, "scratch directory")->required();
  app.add_option("--cache", o.cache, "memo directory for desk-scale runs");
  app.add_option("--known-fail", o.known_fail, "comma separated criteria expected to fail");
  app.add_option("--threads", o.threads, "worker threads for desk-scale runs");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  fs::create_directories(o.work);

  std::set<int> known;
  {
    std::stringstream in(o.known_fail);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (!item.empty()) known.insert(std::stoi(item));
    }
  }

  const std::map<int, std::pair<const char*, std::function<Outcome(const Options&)>>> table = {
      {1, {"noise model fidelity", noise_fidelity}},
      {2, {"gradient exactness", gradient_exactness}},
      {3, {"masking ratio trend", masking_ratio_trend}},
      {4, {"gap ordering", gap_ordering}},
      {5, {"selection accuracy", selection_accuracy}},
      {6, {"shuffle benefit", shuffle_benefit}},
      {7, {"shuffle invariants", shuffle_invariants}},
      {8, {"unit contracts", unit_contracts}},
      {9, {"model size", model_size}},
      {10, {"reproducibility", reproducibility}},
  };

  bool unexpected = false;
  bool expected = false;
  for (int id : criteria) {
    const auto it = table.find(id);
    if (it == table.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 1;
    }
    if (id == 10 && o.cli.empty()) {
      std::cerr << "criterion 10 needs --cli\n";
      return 1;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome r;
    try {
      r = it->second.second(o);
    } catch (const std::exception& e) {
      r = {false, std::string("error: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string status = r.pass ? "PASS" : "FAIL";
    if (!r.pass && known.count(id)) status = "FAIL (known)";
    std::cout << "criterion " << std::setw(2) << id << " " << std::left << std::setw(22)
              << it->second.first << std::right << " " << status << "  " << r.detail << "  ["
              << fmt(seconds, 3) << " s]" << std::endl;
    if (!r.pass) (known.count(id) ? expected : unexpected) = true;
  }
  if (unexpected) return 1;
  return expected ? 77 : 0;
}
