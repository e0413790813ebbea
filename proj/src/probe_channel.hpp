#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spin_state.hpp"

namespace pqs {

/// Stroboscopic Faraday probe and compensation pulse train.
struct PulseTrainConfig {
  double g = 3.08e-7;               // rad per spin
  double n_photons_v = 2.74e6;      // V-polarized probe pulse
  double n_photons_h = 1.49e6;      // H-polarized compensation pulse
  double pulse_period = 3e-6;       // s
  double pulse_duration = 0.6e-6;   // s
  double larmor_omega = 2.0 * 3.14159265358979323846 * 33e3;  // rad/s
  double t2 = 1.2e-3;               // s, starting value for the FID fit
  double phi0 = 1e-3;               // rad
  DecoherenceParams deco;
  double dephasing_rate = 0.0;      // 1/s, dephasing applied per pulse slot
  bool quantum_noise = true;        // off: noiseless mean-field signal
  bool photon_poisson = false;      // Poisson photon number per probe pulse

  void validate() const;
};

enum class TraceLabel { with_atoms, no_atoms };

const char* to_string(TraceLabel label);
TraceLabel parse_trace_label(const std::string& text);

struct TraceSample {
  double t = 0.0;          // s
  double phi = 0.0;        // rad
  double n_photons = 0.0;  // probe photons in this pulse
};

struct Trace {
  std::vector<TraceSample> samples;  // strictly increasing t
  double t_e = 0.0;
  TraceLabel label = TraceLabel::with_atoms;
  std::uint64_t trial_seed = 0;
  int trial = 0;

  void validate() const;
};

struct SimulatedTrace {
  Trace trace;
  /// Spin state right after each pulse (measurement, back-action and
  /// decoherence applied), aligned with trace.samples.
  std::vector<GaussianSpinState> states;
};

/// Deterministic rotation angle g <F_z>.
double faraday_signal(const GaussianSpinState& state, double g);

/// Rotation angle for one draw of F_z from the state's z marginal.
double faraday_signal(const GaussianSpinState& state, double g, std::mt19937_64& rng);

/// arcsin(S_y' / S_x).
double polarimeter_estimate(double sx, double sy_prime);

/// Variance of the polarimeter angle estimate for a coherent pulse: 1 / n.
double shot_noise_variance(double n_photons);

/// Conditions the state on phi = g F_z + noise(readout_var).
GaussianSpinState kalman_update(const GaussianSpinState& state, double measured_phi,
                                double g, double readout_var);

/// Pulse times t_start + (k + 1/2) period for every whole slot in duration.
std::vector<double> pulse_times(double t_start, double duration, double period);

/// Runs the pulse train on state0 starting at t_start. Each slot: precess to
/// the pulse time, record phi, condition on it, inject back-action, then
/// scatter (V + H photons) and dephase.
SimulatedTrace simulate_trace(const GaussianSpinState& state0, const PulseTrainConfig& cfg,
                              double t_start, double duration, double t_e,
                              std::uint64_t rng_seed);

}  // namespace pqs
