#pragma once

#include "experiment_config.hpp"
#include "fid_estimator.hpp"

namespace pqs {

/// Exact second moments of the window estimates under the linear-Gaussian
/// model, without sampling. The per-slot dynamics are those of
/// simulate_trace: precession, then scattering and dephasing.
struct AnalyticModel {
  ConditionalStats stats;  // means, covariances, gamma_zero; no residuals
  ClassicalParams params;  // true FID parameters of the mean signal
};

/// Needs method-compatible settings: quantum noise on, fixed photon number,
/// no technical jitter. `stats.std_err` holds the expected sampling error
/// of gamma_cond at cfg.trials from the Wishart approximation.
AnalyticModel analytic_model(const ExperimentConfig& cfg);

/// Covariance of the M2 estimate given the full M1 record: the Kalman
/// covariance after the M1 pulses, propagated through M2 and mapped by the
/// M2 estimator. A lower bound on gamma_cond, which conditions on the
/// two-component M1 estimate only.
Mat2 kalman_mapped_gamma_cond(const ExperimentConfig& cfg);

}  // namespace pqs
