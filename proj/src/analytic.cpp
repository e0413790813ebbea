#include "analytic.hpp"

#include <cmath>
#include <limits>

namespace pqs {

namespace {

using Eigen::MatrixXd;

// Rows 0..1 of the returned matrix map the trace onto the window estimate;
// samples outside [first, last) get zero weight.
MatrixXd window_estimator(const DesignMatrix& h, Eigen::Index first, Eigen::Index last,
                          double weight) {
  const auto block = h.middleRows(first, last - first);
  const Mat2 normal = weight * block.transpose() * block;
  MatrixXd l = MatrixXd::Zero(2, h.rows());
  l.middleCols(first, last - first) = normal.inverse() * (weight * block.transpose());
  return l;
}

// Covariance of the recorded angles for pulses whose states (at the pulse
// instants, before conditioning) are `states`, given the slot transition.
MatrixXd angle_covariance(const std::vector<GaussianSpinState>& states, const Mat3& step, double g,
                          double readout_var) {
  const auto n = static_cast<Eigen::Index>(states.size());
  MatrixXd sigma = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Mat3 m = states[static_cast<std::size_t>(j)].cov;
    for (Eigen::Index k = j; k < n; ++k) {
      sigma(k, j) = sigma(j, k) = g * g * m(kZ, kZ);
      m = step * m;
    }
    sigma(j, j) += readout_var;
  }
  return sigma;
}

}  // namespace

AnalyticModel analytic_model(const ExperimentConfig& cfg) {
  cfg.validate();
  require(!cfg.has_technical_noise() && !cfg.photon_poisson && cfg.quantum_noise, ErrorCode::config,
          "analytic model covers quantum noise only");
  const PulseTrainConfig pulse = cfg.pulse_train();
  const int k_win = cfg.pulses_per_window();
  const std::vector<double> times = pulse_times(cfg.t_start(), 2.0 * cfg.window(), pulse.pulse_period);
  const auto n = static_cast<Eigen::Index>(times.size());

  // Unconditional state at each pulse.
  std::vector<GaussianSpinState> states;
  states.reserve(times.size());
  const double dephase = std::exp(-pulse.dephasing_rate * pulse.pulse_period);
  const double slot_decay = std::exp(-pulse.deco.eta_per_photon * (pulse.n_photons_v + pulse.n_photons_h)) * dephase;
  GaussianSpinState s = pcss_new(cfg.n_atoms);
  double t_prev = cfg.t_start();
  for (double t : times) {
    s = rotate_about_x(s, pulse.larmor_omega * (t - t_prev));
    t_prev = t;
    states.push_back(s);
    s = apply_scattering(s, pulse.n_photons_v + pulse.n_photons_h, pulse.deco);
    if (dephase < 1.0) s = apply_dephasing(s, dephase);
  }

  // Cov(s_k, s_j) = A^(k-j) P_j with A the slot transition.
  const Mat3 step = slot_decay * x_rotation(pulse.larmor_omega * pulse.pulse_period);
  const double g = pulse.g;
  const MatrixXd sigma = angle_covariance(states, step, g, shot_noise_variance(pulse.n_photons_v));
  Eigen::VectorXd mean_phi(n);
  for (Eigen::Index j = 0; j < n; ++j) mean_phi[j] = g * states[static_cast<std::size_t>(j)].mean[kZ];

  AnalyticModel out;
  out.params = cfg.nominal_params();
  out.params.t2 = slot_decay < 1.0 ? pulse.pulse_period / -std::log(slot_decay)
                                   : std::numeric_limits<double>::infinity();

  const DesignMatrix h = design_matrix(times, cfg.t_e(), out.params);
  const MatrixXd l1 = window_estimator(h, 0, k_win, pulse.n_photons_v);
  const MatrixXd l2 = window_estimator(h, k_win, n, pulse.n_photons_v);

  ConditionalStats& st = out.stats;
  st.n_trials = cfg.trials;
  st.mean_f1 = l1 * mean_phi;
  st.mean_f2 = l2 * mean_phi;
  st.gamma_f1 = l1 * sigma * l1.transpose();
  st.gamma_f2 = l2 * sigma * l2.transpose();
  st.gamma_cross = l2 * sigma * l1.transpose();
  st.gamma_cond = st.gamma_f2 - st.gamma_cross * st.gamma_f1.inverse() * st.gamma_cross.transpose();
  st.gamma_cond = 0.5 * (st.gamma_cond + st.gamma_cond.transpose());
  st.gamma_zero = shot_noise_variance(pulse.n_photons_v) * l2 * l2.transpose();
  st.has_gamma_zero = true;

  // Residual covariance estimated from n trials with 2 regressors and a mean.
  const double dof = static_cast<double>(cfg.trials - 3);
  if (dof > 0.0) {
    const Mat2& c = st.gamma_cond;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) st.std_err(i, j) = std::sqrt((c(i, j) * c(i, j) + c(i, i) * c(j, j)) / dof);
    }
  }
  return out;
}

Mat2 kalman_mapped_gamma_cond(const ExperimentConfig& cfg) {
  const AnalyticModel model = analytic_model(cfg);
  const PulseTrainConfig pulse = cfg.pulse_train();
  const int k_win = cfg.pulses_per_window();
  const std::vector<double> times = pulse_times(cfg.t_start(), 2.0 * cfg.window(), pulse.pulse_period);
  const double readout_var = shot_noise_variance(pulse.n_photons_v);
  const double dephase = std::exp(-pulse.dephasing_rate * pulse.pulse_period);

  // Condition on every M1 pulse, then propagate freely through M2.
  std::vector<GaussianSpinState> m2_states;
  GaussianSpinState s = pcss_new(cfg.n_atoms);
  double t_prev = cfg.t_start();
  for (std::size_t k = 0; k < times.size(); ++k) {
    s = rotate_about_x(s, pulse.larmor_omega * (times[k] - t_prev));
    t_prev = times[k];
    if (static_cast<int>(k) < k_win) {
      s = kalman_update(s, faraday_signal(s, pulse.g), pulse.g, readout_var);
      s = backaction_inject(s, pulse.g, pulse.n_photons_v);
    } else {
      m2_states.push_back(s);
    }
    s = apply_scattering(s, pulse.n_photons_v + pulse.n_photons_h, pulse.deco);
    if (dephase < 1.0) s = apply_dephasing(s, dephase);
  }
  const double slot_decay =
      std::exp(-pulse.deco.eta_per_photon * (pulse.n_photons_v + pulse.n_photons_h)) * dephase;
  const Mat3 step = slot_decay * x_rotation(pulse.larmor_omega * pulse.pulse_period);
  const MatrixXd sigma = angle_covariance(m2_states, step, pulse.g, readout_var);

  const std::vector<double> m2_times(times.begin() + k_win, times.end());
  const DesignMatrix h = design_matrix(m2_times, cfg.t_e(), model.params);
  const MatrixXd l2 = window_estimator(h, 0, h.rows(), pulse.n_photons_v);
  Mat2 out = l2 * sigma * l2.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace pqs
