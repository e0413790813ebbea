#include "probe_channel.hpp"

#include <cmath>

namespace pqs {

void PulseTrainConfig::validate() const {
  require(std::isfinite(g) && g >= 0.0, ErrorCode::config, "g must be >= 0");
  require(n_photons_v > 0.0, ErrorCode::config, "n_photons_v must be > 0");
  require(n_photons_h >= 0.0, ErrorCode::config, "n_photons_h must be >= 0");
  require(pulse_period > 0.0, ErrorCode::config, "pulse_period must be > 0");
  require(pulse_duration >= 0.0 && pulse_duration < pulse_period, ErrorCode::config,
          "pulse_duration must lie in [0, pulse_period)");
  require(std::isfinite(larmor_omega) && larmor_omega >= 0.0, ErrorCode::config,
          "larmor frequency must be >= 0");
  require(t2 > 0.0, ErrorCode::config, "t2 must be > 0");
  require(std::isfinite(phi0), ErrorCode::config, "phi0 must be finite");
  require(dephasing_rate >= 0.0, ErrorCode::config, "dephasing rate must be >= 0");
  deco.validate();
}

const char* to_string(TraceLabel label) {
  return label == TraceLabel::with_atoms ? "with_atoms" : "no_atoms";
}

TraceLabel parse_trace_label(const std::string& text) {
  if (text == "with_atoms") return TraceLabel::with_atoms;
  if (text == "no_atoms") return TraceLabel::no_atoms;
  throw Error(ErrorCode::parse, "unknown trace label '" + text + "'");
}

void Trace::validate() const {
  for (std::size_t k = 0; k < samples.size(); ++k) {
    require(std::isfinite(samples[k].phi) && std::isfinite(samples[k].t), ErrorCode::invalid_argument,
            "trace sample is not finite");
    if (k > 0) {
      require(samples[k].t > samples[k - 1].t, ErrorCode::invalid_argument,
              "trace sample times must be strictly increasing");
    }
  }
}

double faraday_signal(const GaussianSpinState& state, double g) { return g * state.mean[kZ]; }

double faraday_signal(const GaussianSpinState& state, double g, std::mt19937_64& rng) {
  const double sd = std::sqrt(std::max(state.cov(kZ, kZ), 0.0));
  std::normal_distribution<double> normal(0.0, 1.0);
  return g * (state.mean[kZ] + sd * normal(rng));
}

double polarimeter_estimate(double sx, double sy_prime) {
  require(sx > 0.0, ErrorCode::domain, "polarimeter reference S_x must be positive");
  const double ratio = sy_prime / sx;
  require(std::abs(ratio) <= 1.0, ErrorCode::domain, "polarimeter saturated: |S_y'/S_x| > 1");
  return std::asin(ratio);
}

double shot_noise_variance(double n_photons) {
  require(n_photons > 0.0, ErrorCode::invalid_argument, "photon number must be positive");
  return 1.0 / n_photons;
}

GaussianSpinState kalman_update(const GaussianSpinState& state, double measured_phi, double g,
                                double readout_var) {
  require(readout_var >= 0.0, ErrorCode::invalid_argument, "readout variance must be >= 0");
  const Vec3 h(0.0, 0.0, g);
  const Vec3 ph = state.cov * h;
  const double innovation_var = h.dot(ph) + readout_var;
  if (innovation_var <= 0.0) return state;
  const Vec3 gain = ph / innovation_var;
  GaussianSpinState out = state;
  out.mean += gain * (measured_phi - g * state.mean[kZ]);
  out.cov -= gain * ph.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

std::vector<double> pulse_times(double t_start, double duration, double period) {
  const auto n = static_cast<std::size_t>(std::floor(duration / period + 1e-9));
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) {
    times[k] = t_start + (static_cast<double>(k) + 0.5) * period;
  }
  return times;
}

SimulatedTrace simulate_trace(const GaussianSpinState& state0, const PulseTrainConfig& cfg,
                              double t_start, double duration, double t_e,
                              std::uint64_t rng_seed) {
  cfg.validate();
  require(duration > 0.0 && t_e >= t_start && t_e <= t_start + duration, ErrorCode::invalid_argument,
          "trace duration must cover t_e");

  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::poisson_distribution<long long> poisson(cfg.n_photons_v);

  SimulatedTrace out;
  out.trace.t_e = t_e;
  out.trace.trial_seed = rng_seed;
  out.trace.label = state0.n_atoms > 0.0 ? TraceLabel::with_atoms : TraceLabel::no_atoms;

  const std::vector<double> times = pulse_times(t_start, duration, cfg.pulse_period);
  out.trace.samples.reserve(times.size());
  out.states.reserve(times.size());
  const double dephase = std::exp(-cfg.dephasing_rate * cfg.pulse_period);

  GaussianSpinState state = state0;
  double t_prev = t_start;
  for (double t : times) {
    state = rotate_about_x(state, cfg.larmor_omega * (t - t_prev));
    t_prev = t;

    double n_probe = cfg.n_photons_v;
    if (cfg.photon_poisson) n_probe = static_cast<double>(std::max<long long>(poisson(rng), 1));

    double phi = 0.0;
    if (cfg.quantum_noise) {
      const double readout_var = shot_noise_variance(n_probe);
      const double signal = faraday_signal(state, cfg.g, rng);
      phi = signal + std::sqrt(readout_var) * normal(rng) + cfg.phi0;
      state = kalman_update(state, phi - cfg.phi0, cfg.g, readout_var);
      state = backaction_inject(state, cfg.g, n_probe);
    } else {
      phi = faraday_signal(state, cfg.g) + cfg.phi0;
    }
    out.trace.samples.push_back({t, phi, n_probe});

    state = apply_scattering(state, n_probe + cfg.n_photons_h, cfg.deco);
    if (dephase < 1.0) state = apply_dephasing(state, dephase);
    out.states.push_back(state);
  }
  return out;
}

}  // namespace pqs
