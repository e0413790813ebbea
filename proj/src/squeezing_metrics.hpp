#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "types.hpp"

namespace pqs {

enum class SubtractionMode { raw, readout_subtracted };

const char* to_string(SubtractionMode mode);
SubtractionMode parse_subtraction_mode(const std::string& text);

/// Entanglement witness threshold for f = 1 atoms, stored as a rational.
struct WitnessThreshold {
  static constexpr long long numerator = 7;
  static constexpr long long denominator = 16;
  static constexpr double value() { return double(numerator) / double(denominator); }
};

/// First and second planar moments of the spin at the estimation epoch.
struct PlanarMoments {
  double mean_y = 0.0;
  double mean_z = 0.0;
  double var_y = 0.0;
  double var_z = 0.0;
  double cov_yz = 0.0;
  double f_par = 0.0;       // |<F_y>, <F_z>|
  double n_atoms_in = 0.0;  // input coherence <N_A>
  double n_tilde = 0.0;     // atoms remaining in f = 1 after probing

  Mat2 covariance() const;

  /// Moments with mean (mean_y, mean_z), f_par taken as their norm.
  static PlanarMoments from(const Vec2& mean, const Mat2& gamma, double n_atoms_in, double n_tilde);
};

/// (eta_sc + p (1 - eta_sc)) N_A.
double remaining_atoms(double n_atoms, double eta_sc, double p_return);

/// gamma, less gamma0 in readout_subtracted mode.
Mat2 adjusted_gamma(const Mat2& gamma, const Mat2& gamma0, SubtractionMode mode);

struct PlanarSqueezing {
  double xi_par_sq = 0.0;
  double xi_y_sq = 0.0;
  double xi_z_sq = 0.0;
};

PlanarSqueezing xi_parallel_sq(const PlanarMoments& moments, const Mat2& gamma, const Mat2& gamma0,
                               SubtractionMode mode);

struct EntanglementWitness {
  double xi_e_sq = 0.0;
  bool entangled = false;
};

EntanglementWitness xi_e_sq(const PlanarMoments& moments, const Mat2& gamma, const Mat2& gamma0,
                            SubtractionMode mode);

double xi_m_sq(const PlanarMoments& moments, const Mat2& gamma, const Mat2& gamma0,
               SubtractionMode mode);

/// Phase-estimation variance at precession phase phi for a state with the
/// given mean and covariance (y, z ordering).
double phase_variance(const Vec2& mean, const Mat2& gamma, double phi);
double phase_variance(const PlanarMoments& moments, const Mat2& gamma, double phi);

/// 1 / (2 F_par).
double sql_phase_variance(double f_par);

struct AlignedState {
  Vec2 mean;
  Mat2 gamma;
};

/// Rotates mean and covariance so the coherence lies along +y.
AlignedState align_coherence(const Vec2& mean, const Mat2& gamma);

using PhaseVarianceFn = std::function<double(double)>;

/// Phase variance of a Poissonian coherent spin state with <F_y> = N.
PhaseVarianceFn pcss_reference(double n_atoms);

/// Phase variance of an ideal single-variable squeezed state from one QND
/// measurement of n_total_photons: Var F_y = N, Var F_z = (N/2) / (1 +
/// g^2 N_L N / 2), coherence eta_sc N along y.
PhaseVarianceFn sss_reference(double n_atoms, double g, double n_total_photons, double eta_sc);

/// Phase variance of a fixed (mean, gamma) state.
PhaseVarianceFn state_phase_variance(const Vec2& mean, const Mat2& gamma);

/// Open-interval grid over (-pi/2, pi/2) with half-step offset.
std::vector<double> phase_grid(int points);

struct DbPoint {
  double phi = 0.0;
  std::optional<double> db;  // empty where either curve diverges
};

/// -10 log10(candidate / reference); positive means candidate is better.
std::vector<DbPoint> enhancement_db(const PhaseVarianceFn& candidate, const PhaseVarianceFn& reference,
                                    const std::vector<double>& phi_grid);

struct CurvePoint {
  double phi = 0.0;
  std::optional<double> value;
};

std::vector<CurvePoint> sample_curve(const PhaseVarianceFn& fn, const std::vector<double>& phi_grid);

struct ValueWithError {
  double value = 0.0;
  double std_err = 0.0;
};

struct MetricsReport {
  SubtractionMode subtraction_mode = SubtractionMode::raw;
  double f_par = 0.0;
  double n_atoms_in = 0.0;
  double n_tilde = 0.0;
  ValueWithError xi_par_sq;
  ValueWithError xi_y_sq;
  ValueWithError xi_z_sq;
  ValueWithError xi_e_sq;
  ValueWithError xi_m_sq;
  bool entangled = false;
  double sql = 0.0;                       // rad^2
  double min_phase_variance = 0.0;        // over phi, aligned state
  std::vector<CurvePoint> phase_curve;    // aligned PQS
  std::vector<DbPoint> enhancement_db;    // PQS over PCSS
};

struct MetricsInputs {
  Vec2 mean = Vec2::Zero();   // coherence at t_e
  Mat2 gamma = Mat2::Zero();  // conditional covariance
  Mat2 gamma_std_err = Mat2::Zero();
  std::optional<Mat2> gamma_zero;
  double n_atoms_in = 0.0;
  double eta_sc = 1.0;
  double p_return = 0.0;
  SubtractionMode mode = SubtractionMode::raw;
  int grid_points = 721;
};

MetricsReport compute_metrics(const MetricsInputs& in);

/// Minimum of phase_variance over phi for a state whose coherence is along
/// +y: (var_z - cov^2 / var_y) / F_par^2, reached at tan(phi) = -cov / var_y.
double min_phase_variance_aligned(const AlignedState& state);

}  // namespace pqs
