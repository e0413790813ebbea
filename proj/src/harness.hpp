#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "experiment_config.hpp"
#include "fid_estimator.hpp"
#include "squeezing_metrics.hpp"

namespace pqs {

/// Key identifying a scan point: hash of the atom number and window length.
std::uint64_t point_key(double n_atoms, double window_us);

/// Per-trial seed from the master seed, the scan point, the trial index and
/// whether atoms are loaded. Independent of scheduling and of trial count.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t point, int trial, TraceLabel label);

/// Simulates cfg.trials traces with atoms (label with_atoms) and, when
/// `with_calibration`, as many without. Traces are rounded to their CSV
/// representation, atom traces first, each group ordered by trial.
std::vector<Trace> simulate_traces(const ExperimentConfig& cfg, bool with_calibration);

struct Analysis {
  ConditionalStats stats;
  MetricsReport metrics;
  ClassicalParams params;
  std::optional<ClassicalFit> fit;  // empty when params were supplied
};

/// The estimation pipeline shared by simulate and analyze: FID fit over the
/// atom traces (unless `fixed` is given), window estimates for M1 = [t_e -
/// dt, t_e) and M2 = [t_e, t_e + dt), conditional covariance, readout noise
/// from any no-atom traces, then metrics.
Analysis analyze_traces(const std::vector<Trace>& traces, const ExperimentConfig& cfg,
                        const std::optional<ClassicalParams>& fixed = std::nullopt);

/// MetricsReport for stats under cfg (atom number, scattering, mode, grid).
MetricsReport metrics_from_stats(const ConditionalStats& stats, const ExperimentConfig& cfg);

struct RunResult {
  std::vector<Trace> traces;  // empty for the analytic method
  Analysis analysis;
};

/// Sampled or analytic run of cfg.
RunResult run_trials(const ExperimentConfig& cfg);

struct Calibration {
  Mat2 gamma_zero = Mat2::Zero();
  std::vector<Trace> traces;
};

/// Trials without atoms analysed with the nominal FID parameters.
Calibration run_calibration(const ExperimentConfig& cfg);

struct ScanPoint {
  double axis = 0.0;
  ConditionalStats stats;
  MetricsReport metrics;
};

struct ScanResult {
  std::string axis_name;  // column header, with units
  std::vector<ScanPoint> points;
};

ScanResult scan_coherence(const ExperimentConfig& cfg, const std::vector<double>& n_atoms_list);

/// Windows share the probing start t_e - window of cfg, so each point
/// probes for 2 window_us from the same instant. The FID parameters are
/// taken from a run at the base window and held fixed across points.
ScanResult scan_window(const ExperimentConfig& cfg, const std::vector<double>& window_us_list);

struct PhaseCurveRow {
  double phi = 0.0;
  std::optional<double> pqs, pcss, sss, db_pqs, db_sss;
};

/// Phase variance of the aligned measured state, the input PCSS and the
/// ideal SSS over the phase grid, with enhancements over the PCSS in dB.
std::vector<PhaseCurveRow> phase_curve(const ConditionalStats& stats, const ExperimentConfig& cfg);

}  // namespace pqs
