// Command-line front end; talks to the pipeline through the C API only.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pqs/pqs.h"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int exit_code;
};

struct ConfigDeleter {
  void operator()(pqs_config* c) const { pqs_config_free(c); }
};
struct ResultDeleter {
  void operator()(pqs_result* r) const { pqs_result_free(r); }
};
struct ScanDeleter {
  void operator()(pqs_scan* s) const { pqs_scan_free(s); }
};
using ConfigPtr = std::unique_ptr<pqs_config, ConfigDeleter>;
using ResultPtr = std::unique_ptr<pqs_result, ResultDeleter>;
using ScanPtr = std::unique_ptr<pqs_scan, ScanDeleter>;

int exit_code_for(pqs_status s) {
  return s == PQS_ERR_CONFIG || s == PQS_ERR_INVALID_ARGUMENT ? kExitUsage : kExitRuntime;
}

void check(pqs_status s, const std::string& context) {
  if (s == PQS_OK) return;
  std::fprintf(stderr, "pqs: %s: %s: %s\n", context.c_str(), pqs_status_name(s), pqs_last_error());
  throw Failure{exit_code_for(s)};
}

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<unsigned long long> seed;
  std::optional<std::string> mode;
  std::optional<int> grid;
  std::optional<int> threads;
  std::string stats;
  std::vector<std::string> traces;
};

ConfigPtr load(const Options& o) {
  pqs_config* raw = nullptr;
  const pqs_status s = pqs_config_load(o.config.c_str(), &raw);
  if (s != PQS_OK) {
    std::fprintf(stderr, "pqs: config: %s\n", pqs_last_error());
    throw Failure{kExitUsage};
  }
  ConfigPtr cfg(raw);
  auto set = [&](const char* key, const std::string& value) {
    const pqs_status st = pqs_config_set(cfg.get(), key, value.c_str());
    if (st != PQS_OK) {
      std::fprintf(stderr, "pqs: --%s: %s\n", key, pqs_last_error());
      throw Failure{kExitUsage};
    }
  };
  if (o.seed) set("master_seed", std::to_string(*o.seed));
  if (o.mode) set("mode", *o.mode);
  if (o.grid) set("grid_points", std::to_string(*o.grid));
  if (o.threads) set("threads", std::to_string(*o.threads));
  return cfg;
}

std::string prepare_out(const Options& o, const pqs_config* cfg) {
  std::error_code ec;
  std::filesystem::create_directories(o.out, ec);
  if (ec) {
    std::fprintf(stderr, "pqs: cannot create output directory '%s': %s\n", o.out.c_str(), ec.message().c_str());
    throw Failure{kExitRuntime};
  }
  const std::string dir = o.out;
  check(pqs_config_write(cfg, (dir + "/resolved.cfg").c_str()), "writing resolved config");
  return dir;
}

void print_summary(const pqs_result* r) {
  pqs_metrics m{};
  check(pqs_result_metrics(r, &m), "metrics");
  std::printf("F_par = %.4g spins, xi_par^2 = %.4g +- %.2g, xi_e^2 = %.4g (%s), Tr(Gamma_cond) = %.4g spins^2\n",
              m.f_par, m.xi_par_sq, m.xi_par_sq_err, m.xi_e_sq, m.entangled ? "entangled" : "not entangled",
              m.trace_gamma_cond);
}

void write_run(const pqs_result* r, const std::string& dir) {
  check(pqs_result_write_stats(r, (dir + "/stats.txt").c_str()), "writing stats");
  check(pqs_result_write_metrics(r, (dir + "/metrics.txt").c_str()), "writing metrics");
}

int cmd_simulate(const Options& o) {
  ConfigPtr cfg = load(o);
  pqs_result* raw = nullptr;
  check(pqs_simulate(cfg.get(), &raw), "simulate");
  ResultPtr r(raw);
  const std::string dir = prepare_out(o, cfg.get());
  const pqs_status s = pqs_result_write_traces(r.get(), (dir + "/traces.csv").c_str());
  if (s != PQS_ERR_INVALID_ARGUMENT) check(s, "writing traces");  // analytic runs hold none
  write_run(r.get(), dir);
  print_summary(r.get());
  return 0;
}

int cmd_analyze(const Options& o) {
  ConfigPtr cfg = load(o);
  std::vector<const char*> paths;
  for (const auto& p : o.traces) paths.push_back(p.c_str());
  pqs_result* raw = nullptr;
  check(pqs_analyze_files(cfg.get(), paths.data(), paths.size(), &raw), "analyze");
  ResultPtr r(raw);
  write_run(r.get(), prepare_out(o, cfg.get()));
  print_summary(r.get());
  return 0;
}

int cmd_calibrate(const Options& o) {
  ConfigPtr cfg = load(o);
  pqs_result* raw = nullptr;
  check(pqs_calibrate(cfg.get(), &raw), "calibrate");
  ResultPtr r(raw);
  const std::string dir = prepare_out(o, cfg.get());
  double g0[4];
  check(pqs_result_gamma_zero(r.get(), g0), "calibrate");
  const std::string path = dir + "/gamma_zero.txt";
  std::ofstream os(path, std::ios::binary);
  char line[160];
  std::snprintf(line, sizeof line, "gamma_zero: %.9g %.9g %.9g %.9g\n", g0[0], g0[1], g0[2], g0[3]);
  os << "# readout noise without atoms; spins^2; row-major (y, z)\n" << line;
  if (!os) {
    std::fprintf(stderr, "pqs: failed writing '%s'\n", path.c_str());
    throw Failure{kExitRuntime};
  }
  const pqs_status s = pqs_result_write_traces(r.get(), (dir + "/calibration_traces.csv").c_str());
  if (s != PQS_ERR_INVALID_ARGUMENT) check(s, "writing traces");
  std::printf("Gamma_0 = [[%.4g, %.4g], [%.4g, %.4g]] spins^2\n", g0[0], g0[1], g0[2], g0[3]);
  return 0;
}

ResultPtr stats_or_simulate(const Options& o, const pqs_config* cfg) {
  pqs_result* raw = nullptr;
  if (o.stats.empty()) {
    check(pqs_simulate(cfg, &raw), "simulate");
  } else {
    check(pqs_stats_load(cfg, o.stats.c_str(), &raw), "stats");
  }
  return ResultPtr(raw);
}

int cmd_metrics(const Options& o) {
  ConfigPtr cfg = load(o);
  ResultPtr r = stats_or_simulate(o, cfg.get());
  const std::string dir = prepare_out(o, cfg.get());
  check(pqs_result_write_metrics(r.get(), (dir + "/metrics.txt").c_str()), "writing metrics");
  print_summary(r.get());
  return 0;
}

int cmd_phase_curve(const Options& o) {
  ConfigPtr cfg = load(o);
  ResultPtr r = stats_or_simulate(o, cfg.get());
  const std::string dir = prepare_out(o, cfg.get());
  check(pqs_result_write_phase_curve(r.get(), (dir + "/phase_curve.csv").c_str()), "phase curve");
  pqs_metrics m{};
  check(pqs_result_metrics(r.get(), &m), "metrics");
  std::printf("min delta phi = %.4g rad (SQL %.4g rad)\n", std::sqrt(m.min_phase_variance),
              std::sqrt(m.sql_phase_variance));
  return 0;
}

int cmd_scan(const Options& o, bool coherence) {
  ConfigPtr cfg = load(o);
  pqs_scan* raw = nullptr;
  check(coherence ? pqs_scan_coherence(cfg.get(), nullptr, 0, &raw) : pqs_scan_window(cfg.get(), nullptr, 0, &raw),
        "scan");
  ScanPtr scan(raw);
  const std::string dir = prepare_out(o, cfg.get());
  const std::string name = coherence ? "/scan_coherence.csv" : "/scan_window.csv";
  check(pqs_scan_write_csv(scan.get(), (dir + name).c_str()), "writing scan");
  for (size_t i = 0; i < pqs_scan_size(scan.get()); ++i) {
    double axis = 0.0;
    pqs_metrics m{};
    check(pqs_scan_point(scan.get(), i, &axis, &m), "scan");
    std::printf("%s = %.4g: xi_par^2 = %.4g +- %.2g, Tr(Gamma_cond) = %.4g spins^2\n",
                coherence ? "N_A" : "window_us", axis, m.xi_par_sq, m.xi_par_sq_err, m.trace_gamma_cond);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar quantum squeezing: QND probe simulation and conditional-covariance analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pqs_version());

  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Config file (key = value)")->required();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Override master_seed");
    sub->add_option("--mode", o.mode, "Covariance mode")->check(CLI::IsMember({"raw", "subtracted"}));
    sub->add_option("--grid", o.grid, "Phase grid points")->check(CLI::PositiveNumber);
    sub->add_option("--threads", o.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "Simulate trials and analyse them");
  auto* calibrate = app.add_subcommand("calibrate", "Readout noise from trials without atoms");
  auto* analyze = app.add_subcommand("analyze", "Analyse trace CSV files");
  auto* metrics = app.add_subcommand("metrics", "Squeezing metrics from a stats file or a fresh run");
  auto* scan_coh = app.add_subcommand("scan-coherence", "Squeezing versus loaded atom number");
  auto* scan_win = app.add_subcommand("scan-window", "Conditional variance versus window length");
  auto* curve = app.add_subcommand("phase-curve", "Phase sensitivity versus measurement phase");
  for (auto* sub : {simulate, calibrate, analyze, metrics, scan_coh, scan_win, curve}) common(sub);
  analyze->add_option("traces", o.traces, "Trace CSV files")->required()->check(CLI::ExistingFile);
  metrics->add_option("--stats", o.stats, "Stats file (default: simulate)")->check(CLI::ExistingFile);
  curve->add_option("--stats", o.stats, "Stats file (default: simulate)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*calibrate) return cmd_calibrate(o);
    if (*analyze) return cmd_analyze(o);
    if (*metrics) return cmd_metrics(o);
    if (*scan_coh) return cmd_scan(o, true);
    if (*scan_win) return cmd_scan(o, false);
    if (*curve) return cmd_phase_curve(o);
  } catch (const Failure& f) {
    return f.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pqs: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
