#include "spin_state.hpp"

#include <algorithm>
#include <cmath>

namespace pqs {

namespace {

void check_atoms(double n_atoms) {
  require(std::isfinite(n_atoms) && n_atoms >= 0.0, ErrorCode::invalid_argument,
          "atom number must be finite and non-negative");
}

Mat3 symmetrized(const Mat3& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

void DecoherenceParams::validate() const {
  require(std::isfinite(eta_per_photon) && eta_per_photon >= 0.0, ErrorCode::config,
          "eta_per_photon must be >= 0");
  require(p_return >= 0.0 && p_return <= 1.0, ErrorCode::config,
          "p_return must lie in [0, 1]");
  require(eta_dec > 0.0 && eta_dec <= 1.0, ErrorCode::config,
          "eta_dec must lie in (0, 1]");
}

GaussianSpinState pcss_new(double n_atoms) {
  check_atoms(n_atoms);
  GaussianSpinState s;
  s.n_atoms = n_atoms;
  s.mean = Vec3(0.0, n_atoms, 0.0);
  s.cov = Vec3(0.5 * n_atoms, n_atoms, 0.5 * n_atoms).asDiagonal();
  return s;
}

GaussianSpinState css_new(double n_atoms) {
  check_atoms(n_atoms);
  GaussianSpinState s;
  s.n_atoms = n_atoms;
  s.mean = Vec3(0.0, n_atoms, 0.0);
  s.cov = Vec3(0.5 * n_atoms, 0.0, 0.5 * n_atoms).asDiagonal();
  return s;
}

Mat3 x_rotation(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  Mat3 r;
  r << 1.0, 0.0, 0.0,
       0.0, c, s,
       0.0, -s, c;
  return r;
}

GaussianSpinState rotate_about_x(const GaussianSpinState& state, double phi) {
  require(std::isfinite(phi), ErrorCode::invalid_argument, "rotation angle must be finite");
  const Mat3 r = x_rotation(phi);
  GaussianSpinState out = state;
  out.mean = r * state.mean;
  out.cov = symmetrized(r * state.cov * r.transpose());
  return out;
}

GaussianSpinState apply_decay(const GaussianSpinState& state, double d) {
  require(d > 0.0 && d <= 1.0, ErrorCode::invalid_argument, "decay factor must lie in (0, 1]");
  if (d == 1.0) return state;
  GaussianSpinState out = state;
  const double floor = d * (1.0 - d) * 0.5 * state.effective_atoms();
  out.mean = d * state.mean;
  out.cov = d * d * state.cov;
  out.cov.diagonal().array() += floor;
  out.coherence_factor = state.coherence_factor * d;
  return out;
}

GaussianSpinState apply_scattering(const GaussianSpinState& state, double n_photons,
                                   const DecoherenceParams& params) {
  require(std::isfinite(n_photons) && n_photons >= 0.0, ErrorCode::invalid_argument,
          "photon number must be non-negative");
  return apply_decay(state, std::exp(-params.eta_per_photon * n_photons));
}

GaussianSpinState apply_dephasing(const GaussianSpinState& state, double eta_dec) {
  require(eta_dec > 0.0 && eta_dec <= 1.0, ErrorCode::invalid_argument,
          "eta_dec must lie in (0, 1]");
  return apply_decay(state, eta_dec);
}

GaussianSpinState backaction_inject(const GaussianSpinState& state, double g,
                                    double n_photons) {
  require(g >= 0.0 && n_photons >= 0.0, ErrorCode::invalid_argument,
          "back-action needs g >= 0 and n_photons >= 0");
  const double var_theta = g * g * 0.25 * n_photons;
  if (var_theta == 0.0) return state;
  // dF_x = -theta F_y, dF_y = theta F_x
  const double mx = state.mean[kX];
  const double my = state.mean[kY];
  GaussianSpinState out = state;
  out.cov(kX, kX) += var_theta * my * my;
  out.cov(kY, kY) += var_theta * mx * mx;
  out.cov(kX, kY) -= var_theta * mx * my;
  out.cov(kY, kX) = out.cov(kX, kY);
  return out;
}

double robertson_slack(const GaussianSpinState& state) {
  double worst = 1.0;
  for (int k = 0; k < 3; ++k) {
    const int i = (k + 1) % 3;
    const int j = (k + 2) % 3;
    const double lhs = state.cov(i, i) * state.cov(j, j);
    const double rhs = 0.25 * state.mean[k] * state.mean[k];
    const double scale = std::max(lhs, rhs);
    if (scale == 0.0) continue;
    worst = std::min(worst, (lhs - rhs) / scale);
  }
  return worst;
}

bool satisfies_robertson(const GaussianSpinState& state, double rel_tol) {
  return robertson_slack(state) >= -rel_tol;
}

double relative_min_eigenvalue(const Mat3& cov) {
  const double tr = cov.trace();
  if (tr == 0.0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat3> es(symmetrized(cov), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() / std::abs(tr);
}

}  // namespace pqs
