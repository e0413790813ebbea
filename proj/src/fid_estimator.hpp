#pragma once

#include <span>
#include <vector>

#include "probe_channel.hpp"

namespace pqs {

/// How the FID envelope treats samples before t_e. `literal` evaluates
/// exp(-t_r / T2) with signed t_r (the envelope grows into the past);
/// `absolute` uses exp(-|t_r| / T2).
enum class EnvelopeMode { literal, absolute };

const char* to_string(EnvelopeMode mode);
EnvelopeMode parse_envelope_mode(const std::string& text);

/// Classical parameters of the free-induction-decay model
///   phi(t) = g (F_z cos(w t_r) - F_y sin(w t_r)) exp(-t_r / T2) + phi0,
/// with t_r = t - t_e. T2 may be +inf (no decay).
struct ClassicalParams {
  double g = 0.0;
  double larmor_omega = 0.0;
  double t2 = 1.0;
  double phi0 = 0.0;
  EnvelopeMode envelope = EnvelopeMode::literal;

  double decay_rate() const { return 1.0 / t2; }
  double envelope_at(double t_r) const;
  void validate() const;
};

/// Half-open time interval [t_start, t_end).
struct Window {
  double t_start = 0.0;
  double t_end = 0.0;

  bool contains(double t) const { return t >= t_start && t < t_end; }
};

struct SpinEstimate {
  Vec2 f = Vec2::Zero();            // (F_y, F_z) at t_e
  Mat2 est_cov = Mat2::Zero();      // (H^T W H)^-1
  Window window;
  int n_samples = 0;
};

using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Rows map (F_y, F_z) at t_e onto phi(t_k) - phi0.
DesignMatrix design_matrix(std::span<const double> times, double t_e, const ClassicalParams& params);

/// Weighted (1 / shot-noise variance) linear least-squares estimate of the
/// spin at t_e from the samples of `trace` that fall inside `window`.
SpinEstimate estimate_window(const Trace& trace, const Window& window, double t_e,
                             const ClassicalParams& params);

struct FitOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-8;
  /// Coarse scan of the Larmor frequency around the starting value before
  /// the Levenberg-Marquardt iterations, guarding against aliased minima.
  bool scan_frequency = true;
  double scan_span = 0.1;  // relative half-width
  int scan_points = 81;
};

struct ClassicalFit {
  ClassicalParams params;
  double omega_std_err = 0.0;
  double t2_std_err = 0.0;
  double phi0_std_err = 0.0;
  double scaled_gradient = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
};

/// Fits w_L, T2 and phi0 jointly over all traces, with free per-trace
/// amplitudes (F_y, F_z) at t_e projected out (variable projection). `start`
/// supplies g, the envelope mode and the starting values.
ClassicalFit fit_classical_params(std::span<const Trace> traces, const ClassicalParams& start,
                                  const FitOptions& options = {});

struct EstimatePair {
  Vec2 f1 = Vec2::Zero();
  Vec2 f2 = Vec2::Zero();
};

struct ConditionalStats {
  int n_trials = 0;
  Vec2 mean_f1 = Vec2::Zero();
  Vec2 mean_f2 = Vec2::Zero();
  Mat2 gamma_f1 = Mat2::Zero();
  Mat2 gamma_f2 = Mat2::Zero();
  Mat2 gamma_cross = Mat2::Zero();  // Gamma_{F2 F1}
  Mat2 gamma_cond = Mat2::Zero();   // Gamma_{F2 | F1}
  Mat2 gamma_zero = Mat2::Zero();   // readout noise, when calibrated
  bool has_gamma_zero = false;
  std::vector<Vec2> residuals;      // best-linear-prediction errors
  Mat2 std_err = Mat2::Zero();      // delete-one jackknife of gamma_cond
};

inline constexpr double kMaxConditionNumber = 1e12;

/// Conditional covariance of F2 given F1 over repeated trials, with sample
/// covariances normalised by 1/(n-1).
ConditionalStats conditional_covariance(std::span<const EstimatePair> pairs);

/// Sample covariance (1/(n-1)) of `values`.
Mat2 sample_covariance(std::span<const Vec2> values);

/// Readout-noise covariance: spread of window estimates over traces taken
/// without atoms.
Mat2 readout_noise(std::span<const Trace> no_atom_traces, const Window& window, double t_e,
                   const ClassicalParams& params);

}  // namespace pqs
