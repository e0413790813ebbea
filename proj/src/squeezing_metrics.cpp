#include "squeezing_metrics.hpp"

#include <cmath>

namespace pqs {

const char* to_string(SubtractionMode mode) {
  return mode == SubtractionMode::raw ? "raw" : "readout_subtracted";
}

SubtractionMode parse_subtraction_mode(const std::string& text) {
  if (text == "raw") return SubtractionMode::raw;
  if (text == "subtracted" || text == "readout_subtracted") return SubtractionMode::readout_subtracted;
  throw Error(ErrorCode::config, "unknown subtraction mode '" + text + "' (raw|subtracted)");
}

Mat2 PlanarMoments::covariance() const {
  Mat2 m;
  m << var_y, cov_yz, cov_yz, var_z;
  return m;
}

PlanarMoments PlanarMoments::from(const Vec2& mean, const Mat2& gamma, double n_atoms_in,
                                  double n_tilde) {
  PlanarMoments m;
  m.mean_y = mean[0];
  m.mean_z = mean[1];
  m.var_y = gamma(0, 0);
  m.var_z = gamma(1, 1);
  m.cov_yz = 0.5 * (gamma(0, 1) + gamma(1, 0));
  m.f_par = mean.norm();
  m.n_atoms_in = n_atoms_in;
  m.n_tilde = n_tilde;
  return m;
}

double remaining_atoms(double n_atoms, double eta_sc, double p_return) {
  return (eta_sc + p_return * (1.0 - eta_sc)) * n_atoms;
}

Mat2 adjusted_gamma(const Mat2& gamma, const Mat2& gamma0, SubtractionMode mode) {
  return mode == SubtractionMode::raw ? gamma : Mat2(gamma - gamma0);
}

namespace {

void require_coherence(double f_par) {
  require(f_par > 0.0 && std::isfinite(f_par), ErrorCode::domain,
          "planar coherence F_par must be positive");
}

}  // namespace

PlanarSqueezing xi_parallel_sq(const PlanarMoments& moments, const Mat2& gamma, const Mat2& gamma0,
                               SubtractionMode mode) {
  require_coherence(moments.f_par);
  const Mat2 g = adjusted_gamma(gamma, gamma0, mode);
  PlanarSqueezing out;
  out.xi_y_sq = 2.0 * g(0, 0) / moments.f_par;
  out.xi_z_sq = 2.0 * g(1, 1) / moments.f_par;
  out.xi_par_sq = 0.5 * (out.xi_y_sq + out.xi_z_sq);
  return out;
}

EntanglementWitness xi_e_sq(const PlanarMoments& moments, const Mat2& gamma, const Mat2& gamma0,
                            SubtractionMode mode) {
  require(moments.n_tilde > 0.0, ErrorCode::domain, "remaining atom number must be positive");
  const Mat2 g = adjusted_gamma(gamma, gamma0, mode);
  EntanglementWitness out;
  out.xi_e_sq = g.trace() / moments.n_tilde;
  // Strict xi_e^2 < 7/16, compared without rounding the threshold:
  // trace * 16 < 7 * n_tilde.
  out.entangled = g.trace() * WitnessThreshold::denominator <
                  WitnessThreshold::numerator * moments.n_tilde;
  return out;
}

double xi_m_sq(const PlanarMoments& moments, const Mat2& gamma, const Mat2& gamma0,
               SubtractionMode mode) {
  require_coherence(moments.f_par);
  const Mat2 g = adjusted_gamma(gamma, gamma0, mode);
  return moments.n_atoms_in * g.trace() / (moments.f_par * moments.f_par);
}

double phase_variance(const Vec2& mean, const Mat2& gamma, double phi) {
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  const double slope = mean[0] * c + mean[1] * s;
  require(std::abs(slope) > 1e-12 * mean.norm() && mean.norm() > 0.0, ErrorCode::domain,
          "phase sensitivity diverges: d<F_z>/dphi = 0");
  const double var_z_phi =
      gamma(0, 0) * s * s + gamma(1, 1) * c * c + 0.5 * (gamma(0, 1) + gamma(1, 0)) * std::sin(2.0 * phi);
  return var_z_phi / (slope * slope);
}

double phase_variance(const PlanarMoments& moments, const Mat2& gamma, double phi) {
  return phase_variance(Vec2(moments.mean_y, moments.mean_z), gamma, phi);
}

double sql_phase_variance(double f_par) {
  require_coherence(f_par);
  return 1.0 / (2.0 * f_par);
}

AlignedState align_coherence(const Vec2& mean, const Mat2& gamma) {
  const double f = mean.norm();
  require_coherence(f);
  const double c = mean[0] / f;
  const double s = mean[1] / f;
  Mat2 r;
  r << c, s, -s, c;
  AlignedState out;
  out.mean = Vec2(f, 0.0);
  out.gamma = r * gamma * r.transpose();
  out.gamma = 0.5 * (out.gamma + out.gamma.transpose());
  return out;
}

PhaseVarianceFn state_phase_variance(const Vec2& mean, const Mat2& gamma) {
  return [mean, gamma](double phi) { return phase_variance(mean, gamma, phi); };
}

PhaseVarianceFn pcss_reference(double n_atoms) {
  require(n_atoms > 0.0, ErrorCode::invalid_argument, "PCSS reference needs N > 0");
  return state_phase_variance(Vec2(n_atoms, 0.0), Vec2(n_atoms, 0.5 * n_atoms).asDiagonal());
}

PhaseVarianceFn sss_reference(double n_atoms, double g, double n_total_photons, double eta_sc) {
  require(n_atoms > 0.0 && g >= 0.0 && n_total_photons >= 0.0 && eta_sc > 0.0,
          ErrorCode::invalid_argument, "SSS reference parameters must be positive");
  const double var_z = 0.5 * n_atoms / (1.0 + 0.5 * g * g * n_total_photons * n_atoms);
  return state_phase_variance(Vec2(eta_sc * n_atoms, 0.0), Vec2(n_atoms, var_z).asDiagonal());
}

std::vector<double> phase_grid(int points) {
  require(points > 0, ErrorCode::invalid_argument, "phase grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double step = M_PI / points;
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = -0.5 * M_PI + (i + 0.5) * step;
  return grid;
}

namespace {

std::optional<double> try_eval(const PhaseVarianceFn& fn, double phi) {
  try {
    const double v = fn(phi);
    if (std::isfinite(v)) return v;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::domain) throw;
  }
  return std::nullopt;
}

}  // namespace

std::vector<CurvePoint> sample_curve(const PhaseVarianceFn& fn, const std::vector<double>& phi_grid) {
  std::vector<CurvePoint> out;
  out.reserve(phi_grid.size());
  for (double phi : phi_grid) out.push_back({phi, try_eval(fn, phi)});
  return out;
}

std::vector<DbPoint> enhancement_db(const PhaseVarianceFn& candidate, const PhaseVarianceFn& reference,
                                    const std::vector<double>& phi_grid) {
  std::vector<DbPoint> out;
  out.reserve(phi_grid.size());
  for (double phi : phi_grid) {
    DbPoint p{phi, std::nullopt};
    const auto a = try_eval(candidate, phi);
    const auto b = try_eval(reference, phi);
    if (a && b && *a > 0.0 && *b > 0.0) p.db = -10.0 * std::log10(*a / *b);
    out.push_back(p);
  }
  return out;
}

double min_phase_variance_aligned(const AlignedState& state) {
  const double f = state.mean[0];
  require_coherence(f);
  const double vy = state.gamma(0, 0);
  const double vz = state.gamma(1, 1);
  const double c = state.gamma(0, 1);
  if (vy <= 0.0) return vz / (f * f);
  return (vz - c * c / vy) / (f * f);
}

MetricsReport compute_metrics(const MetricsInputs& in) {
  require(in.mode == SubtractionMode::raw || in.gamma_zero.has_value(), ErrorCode::config,
          "readout-subtracted metrics need a readout-noise calibration (gamma_zero)");
  const Mat2 gamma0 = in.gamma_zero.value_or(Mat2::Zero());
  const double n_tilde = remaining_atoms(in.n_atoms_in, in.eta_sc, in.p_return);
  const PlanarMoments m = PlanarMoments::from(in.mean, in.gamma, in.n_atoms_in, n_tilde);

  MetricsReport r;
  r.subtraction_mode = in.mode;
  r.f_par = m.f_par;
  r.n_atoms_in = in.n_atoms_in;
  r.n_tilde = n_tilde;

  const PlanarSqueezing sq = xi_parallel_sq(m, in.gamma, gamma0, in.mode);
  const double se_yy = in.gamma_std_err(0, 0);
  const double se_zz = in.gamma_std_err(1, 1);
  const double se_tr = std::hypot(se_yy, se_zz);
  r.xi_par_sq = {sq.xi_par_sq, se_tr / m.f_par};
  r.xi_y_sq = {sq.xi_y_sq, 2.0 * se_yy / m.f_par};
  r.xi_z_sq = {sq.xi_z_sq, 2.0 * se_zz / m.f_par};
  if (n_tilde > 0.0) {
    const EntanglementWitness w = xi_e_sq(m, in.gamma, gamma0, in.mode);
    r.xi_e_sq = {w.xi_e_sq, se_tr / n_tilde};
    r.entangled = w.entangled;
  }
  r.xi_m_sq = {xi_m_sq(m, in.gamma, gamma0, in.mode), in.n_atoms_in * se_tr / (m.f_par * m.f_par)};
  r.sql = sql_phase_variance(m.f_par);

  const AlignedState aligned = align_coherence(in.mean, adjusted_gamma(in.gamma, gamma0, in.mode));
  r.min_phase_variance = min_phase_variance_aligned(aligned);
  const auto grid = phase_grid(in.grid_points);
  const auto pqs = state_phase_variance(aligned.mean, aligned.gamma);
  r.phase_curve = sample_curve(pqs, grid);
  if (in.n_atoms_in > 0.0) r.enhancement_db = enhancement_db(pqs, pcss_reference(in.n_atoms_in), grid);
  return r;
}

}  // namespace pqs
