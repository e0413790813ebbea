#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fid_estimator.hpp"
#include "probe_channel.hpp"
#include "squeezing_metrics.hpp"

namespace pqs {

enum class RunMethod { sampled, analytic };

const char* to_string(RunMethod method);

/// Everything a run needs, read from a flat `key = value` file. Durations
/// are kept in the microseconds the file uses, so a resolved config written
/// back out reparses to the same values.
struct ExperimentConfig {
  double n_atoms = 1.75e6;
  int trials = 450;
  double window_us = 270.0;
  double t_e_us = 270.0;
  double pulse_period_us = 3.0;
  double pulse_duration_us = 0.6;
  double n_photons_v = 2.74e6;
  double n_photons_h = 1.49e6;
  double g_rad_per_spin = 3.08e-7;
  double sss_g_rad_per_spin = 1.48e-7;
  double larmor_khz = 33.0;
  double t2_us = 1200.0;
  double phi0_rad = 1e-3;
  double eta_per_photon = 3e-10;
  double eta_dec = 0.93;
  double p_return = 0.55;
  SubtractionMode mode = SubtractionMode::raw;
  std::uint64_t master_seed = 1;

  // Knobs beyond the published setup.
  RunMethod method = RunMethod::sampled;
  EnvelopeMode envelope = EnvelopeMode::literal;
  bool quantum_noise = true;
  bool photon_poisson = false;
  double atom_jitter = 0.0;        // relative sd of the loaded atom number
  double larmor_jitter_khz = 0.0;  // sd of the Larmor frequency per trial
  std::vector<double> scan_n_atoms{1e5, 3e5, 6e5, 1e6, 1.75e6};
  std::vector<double> scan_window_us{30, 60, 90, 150, 270, 450, 600};
  int grid_points = 721;
  int threads = 0;  // 0: one per hardware thread

  void validate() const;

  double window() const { return window_us * 1e-6; }
  double t_e() const { return t_e_us * 1e-6; }
  double t_start() const { return t_e() - window(); }
  int pulses_per_window() const;

  /// Dephasing rate that leaves eta_dec of the coherence after one window.
  double dephasing_rate() const;

  /// Survival of the coherence against scattering over one window.
  double eta_sc() const;

  /// Probe photons in one window (N_L).
  double probe_photons_per_window() const;

  PulseTrainConfig pulse_train() const;

  /// FID parameters from the nominal config values (fit starting point).
  ClassicalParams nominal_params() const;

  bool has_technical_noise() const { return atom_jitter > 0.0 || larmor_jitter_khz > 0.0; }
};

/// Parses a config file. Unknown or repeated keys and malformed values raise
/// a config error naming `source` and the line.
ExperimentConfig parse_config(std::istream& is, const std::string& source);
ExperimentConfig load_config(const std::string& path);

/// Sets one key from its text value, with the same rules as the file parser.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Every key with its effective value, in a form parse_config accepts.
std::string format_config(const ExperimentConfig& cfg);

}  // namespace pqs
