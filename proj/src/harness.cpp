#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

#include "analytic.hpp"
#include "trace_io.hpp"

namespace pqs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

// Runs fn(0..n-1) on up to `threads` workers. The first failure by index
// is rethrown with its index prefixed by `what`.
void parallel_for(int n, int threads, const std::string& what, const std::function<void(int)>& fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::max(1, std::min(workers, n));
  std::atomic<int> next{0};
  std::mutex mu;
  int failed_index = n;
  std::exception_ptr failure;
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (!failure) return;
  try {
    std::rethrow_exception(failure);
  } catch (const Error& e) {
    throw Error(e.code(), what + " " + std::to_string(failed_index) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::internal, what + " " + std::to_string(failed_index) + ": " + e.what());
  }
}

Trace simulate_one(const ExperimentConfig& cfg, const PulseTrainConfig& pulse, std::uint64_t point,
                   int trial, TraceLabel label) {
  const std::uint64_t seed = derive_seed(cfg.master_seed, point, trial, label);
  double n_atoms = label == TraceLabel::with_atoms ? cfg.n_atoms : 0.0;
  PulseTrainConfig p = pulse;
  if (cfg.has_technical_noise()) {
    std::mt19937_64 rng(splitmix64(seed ^ 0x6a09e667f3bcc909ULL));
    std::normal_distribution<double> normal(0.0, 1.0);
    n_atoms *= std::max(0.0, 1.0 + cfg.atom_jitter * normal(rng));
    p.larmor_omega = std::max(0.0, p.larmor_omega + 2.0 * M_PI * 1e3 * cfg.larmor_jitter_khz * normal(rng));
  }
  Trace tr = simulate_trace(pcss_new(n_atoms), p, cfg.t_start(), 2.0 * cfg.window(), cfg.t_e(), seed).trace;
  tr.label = label;
  tr.trial = trial;
  quantize_for_csv(tr);
  return tr;
}

Window window_m1(const ExperimentConfig& cfg) { return {cfg.t_e() - cfg.window(), cfg.t_e()}; }
Window window_m2(const ExperimentConfig& cfg) { return {cfg.t_e(), cfg.t_e() + cfg.window()}; }

std::vector<Trace> simulate_label(const ExperimentConfig& cfg, TraceLabel label) {
  const PulseTrainConfig pulse = cfg.pulse_train();
  const std::uint64_t point = point_key(cfg.n_atoms, cfg.window_us);
  std::vector<Trace> out(static_cast<std::size_t>(cfg.trials));
  parallel_for(cfg.trials, cfg.threads, "trial", [&](int i) {
    out[static_cast<std::size_t>(i)] = simulate_one(cfg, pulse, point, i, label);
  });
  return out;
}

}  // namespace

std::uint64_t point_key(double n_atoms, double window_us) {
  return mix(std::bit_cast<std::uint64_t>(n_atoms), std::bit_cast<std::uint64_t>(window_us));
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t point, int trial, TraceLabel label) {
  std::uint64_t h = splitmix64(master_seed);
  h = mix(h, point);
  h = mix(h, static_cast<std::uint64_t>(trial));
  return mix(h, label == TraceLabel::with_atoms ? 0x61746f6dULL : 0x656d7074ULL);
}

std::vector<Trace> simulate_traces(const ExperimentConfig& cfg, bool with_calibration) {
  cfg.validate();
  std::vector<Trace> traces = simulate_label(cfg, TraceLabel::with_atoms);
  if (with_calibration) {
    std::vector<Trace> empty = simulate_label(cfg, TraceLabel::no_atoms);
    traces.insert(traces.end(), std::make_move_iterator(empty.begin()), std::make_move_iterator(empty.end()));
  }
  return traces;
}

MetricsReport metrics_from_stats(const ConditionalStats& stats, const ExperimentConfig& cfg) {
  MetricsInputs in;
  in.mean = stats.mean_f1;
  in.gamma = stats.gamma_cond;
  in.gamma_std_err = stats.std_err;
  if (stats.has_gamma_zero) in.gamma_zero = stats.gamma_zero;
  in.n_atoms_in = cfg.n_atoms;
  in.eta_sc = cfg.eta_sc();
  in.p_return = cfg.p_return;
  in.mode = cfg.mode;
  in.grid_points = cfg.grid_points;
  return compute_metrics(in);
}

Analysis analyze_traces(const std::vector<Trace>& traces, const ExperimentConfig& cfg,
                        const std::optional<ClassicalParams>& fixed) {
  cfg.validate();
  std::vector<Trace> atoms;
  std::vector<Trace> empty;
  for (const auto& tr : traces) (tr.label == TraceLabel::with_atoms ? atoms : empty).push_back(tr);
  require(atoms.size() >= 2, ErrorCode::invalid_argument, "analysis needs at least 2 traces with atoms");

  Analysis out;
  if (fixed) {
    out.params = *fixed;
  } else {
    out.fit = fit_classical_params(atoms, cfg.nominal_params());
    out.params = out.fit->params;
  }

  const Window m1 = window_m1(cfg);
  const Window m2 = window_m2(cfg);
  std::vector<EstimatePair> pairs(atoms.size());
  parallel_for(static_cast<int>(atoms.size()), cfg.threads, "trial", [&](int i) {
    const Trace& tr = atoms[static_cast<std::size_t>(i)];
    pairs[static_cast<std::size_t>(i)] = {estimate_window(tr, m1, tr.t_e, out.params).f,
                                          estimate_window(tr, m2, tr.t_e, out.params).f};
  });
  out.stats = conditional_covariance(pairs);
  if (empty.size() >= 2) {
    out.stats.gamma_zero = readout_noise(empty, m2, cfg.t_e(), out.params);
    out.stats.has_gamma_zero = true;
  }
  out.metrics = metrics_from_stats(out.stats, cfg);
  return out;
}

RunResult run_trials(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult out;
  if (cfg.method == RunMethod::analytic) {
    const AnalyticModel model = analytic_model(cfg);
    out.analysis.stats = model.stats;
    out.analysis.params = model.params;
    out.analysis.metrics = metrics_from_stats(model.stats, cfg);
    return out;
  }
  out.traces = simulate_traces(cfg, true);
  out.analysis = analyze_traces(out.traces, cfg);
  return out;
}

Calibration run_calibration(const ExperimentConfig& cfg) {
  cfg.validate();
  Calibration out;
  if (cfg.method == RunMethod::analytic) {
    out.gamma_zero = analytic_model(cfg).stats.gamma_zero;
    return out;
  }
  out.traces = simulate_label(cfg, TraceLabel::no_atoms);
  out.gamma_zero = readout_noise(out.traces, window_m2(cfg), cfg.t_e(), cfg.nominal_params());
  return out;
}

ScanResult scan_coherence(const ExperimentConfig& cfg, const std::vector<double>& n_atoms_list) {
  require(!n_atoms_list.empty(), ErrorCode::invalid_argument, "empty atom-number list");
  ScanResult out;
  out.axis_name = "n_atoms_spins";
  for (double n : n_atoms_list) {
    ExperimentConfig c = cfg;
    c.n_atoms = n;
    const RunResult r = run_trials(c);
    out.points.push_back({n, r.analysis.stats, r.analysis.metrics});
  }
  return out;
}

ScanResult scan_window(const ExperimentConfig& cfg, const std::vector<double>& window_us_list) {
  require(!window_us_list.empty(), ErrorCode::invalid_argument, "empty window list");
  cfg.validate();
  const double dephasing_rate = cfg.dephasing_rate();
  std::optional<ClassicalParams> params;
  if (cfg.method == RunMethod::sampled) params = run_trials(cfg).analysis.params;

  ScanResult out;
  out.axis_name = "window_us";
  for (double w : window_us_list) {
    ExperimentConfig c = cfg;
    c.window_us = w;
    c.t_e_us = cfg.t_e_us - cfg.window_us + w;
    c.eta_dec = std::exp(-dephasing_rate * w * 1e-6);  // same rate, new window
    RunResult r;
    if (c.method == RunMethod::analytic) {
      r = run_trials(c);
    } else {
      r.analysis = analyze_traces(simulate_traces(c, true), c, params);
    }
    out.points.push_back({w, r.analysis.stats, r.analysis.metrics});
  }
  return out;
}

std::vector<PhaseCurveRow> phase_curve(const ConditionalStats& stats, const ExperimentConfig& cfg) {
  require(cfg.mode == SubtractionMode::raw || stats.has_gamma_zero, ErrorCode::config,
          "subtracted mode needs gamma_zero in the stats");
  const Mat2 gamma = adjusted_gamma(stats.gamma_cond, stats.gamma_zero, cfg.mode);
  const AlignedState aligned = align_coherence(stats.mean_f1, gamma);
  const auto grid = phase_grid(cfg.grid_points);
  const auto pqs = sample_curve(state_phase_variance(aligned.mean, aligned.gamma), grid);
  const auto pcss = sample_curve(pcss_reference(cfg.n_atoms), grid);
  const auto sss = sample_curve(
      sss_reference(cfg.n_atoms, cfg.sss_g_rad_per_spin, cfg.probe_photons_per_window(), cfg.eta_sc()), grid);

  auto db = [](const std::optional<double>& a, const std::optional<double>& b) -> std::optional<double> {
    if (a && b && *a > 0.0 && *b > 0.0) return -10.0 * std::log10(*a / *b);
    return std::nullopt;
  };
  std::vector<PhaseCurveRow> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    rows[i] = {grid[i], pqs[i].value, pcss[i].value, sss[i].value, db(pqs[i].value, pcss[i].value),
               db(sss[i].value, pcss[i].value)};
  }
  return rows;
}

}  // namespace pqs
