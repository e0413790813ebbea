#include "fid_estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace pqs {

const char* to_string(EnvelopeMode mode) {
  return mode == EnvelopeMode::literal ? "literal" : "absolute";
}

EnvelopeMode parse_envelope_mode(const std::string& text) {
  if (text == "literal") return EnvelopeMode::literal;
  if (text == "absolute" || text == "abs") return EnvelopeMode::absolute;
  throw Error(ErrorCode::config, "unknown envelope mode '" + text + "' (literal|absolute)");
}

double ClassicalParams::envelope_at(double t_r) const {
  const double tau = envelope == EnvelopeMode::literal ? t_r : std::abs(t_r);
  return std::exp(-tau / t2);
}

void ClassicalParams::validate() const {
  require(std::isfinite(g) && std::isfinite(larmor_omega) && std::isfinite(phi0),
          ErrorCode::invalid_argument, "classical parameters must be finite");
  require(t2 > 0.0, ErrorCode::invalid_argument, "T2 must be positive");
}

DesignMatrix design_matrix(std::span<const double> times, double t_e, const ClassicalParams& params) {
  params.validate();
  DesignMatrix h(static_cast<Eigen::Index>(times.size()), 2);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t_r = times[k] - t_e;
    const double env = params.envelope_at(t_r);
    const double ph = params.larmor_omega * t_r;
    const auto row = static_cast<Eigen::Index>(k);
    h(row, 0) = -params.g * std::sin(ph) * env;
    h(row, 1) = params.g * std::cos(ph) * env;
  }
  return h;
}

namespace {

double reciprocal_condition(const Mat2& m) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(m, Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().maxCoeff();
  const double lo = es.eigenvalues().minCoeff();
  if (!(hi > 0.0)) return 0.0;
  return lo / hi;
}

}  // namespace

SpinEstimate estimate_window(const Trace& trace, const Window& window, double t_e,
                             const ClassicalParams& params) {
  std::vector<double> times;
  std::vector<double> y;
  std::vector<double> w;
  for (const auto& s : trace.samples) {
    if (!window.contains(s.t)) continue;
    times.push_back(s.t);
    y.push_back(s.phi - params.phi0);
    w.push_back(1.0 / shot_noise_variance(s.n_photons));
  }
  const auto n = times.size();
  require(n >= 3, ErrorCode::identifiability, "window holds fewer than 3 samples");
  const double span = times.back() - times.front();
  require(params.larmor_omega * span >= 0.5 * M_PI * (1.0 - 1e-12), ErrorCode::identifiability,
          "window spans less than a quarter Larmor period");

  const DesignMatrix h = design_matrix(times, t_e, params);
  Mat2 normal = Mat2::Zero();
  Vec2 rhs = Vec2::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 row = h.row(static_cast<Eigen::Index>(k)).transpose();
    normal += w[k] * row * row.transpose();
    rhs += w[k] * y[k] * row;
  }
  require(reciprocal_condition(normal) > 1.0 / kMaxConditionNumber, ErrorCode::identifiability,
          "singular normal matrix in window estimate");

  SpinEstimate est;
  est.est_cov = normal.inverse();
  est.est_cov = 0.5 * (est.est_cov + est.est_cov.transpose());
  est.f = normal.ldlt().solve(rhs);
  est.window = window;
  est.n_samples = static_cast<int>(n);
  return est;
}

namespace {

// Nonlinear parameters of the joint fit: (omega, decay rate, phi0).
struct Evaluation {
  double cost = 0.0;
  Mat3 jtj = Mat3::Zero();  // of the amplitude-projected Jacobian
  Vec3 vtr = Vec3::Zero();  // -J^T r, the Gauss-Newton right-hand side
  double sum_w = 0.0;
};

Evaluation evaluate(std::span<const Trace> traces, double g, const Vec3& theta,
                    EnvelopeMode envelope, bool with_jacobian) {
  const double omega = theta[0];
  const double rate = theta[1];
  const double phi0 = theta[2];
  Evaluation ev;
  for (const auto& tr : traces) {
    const std::size_t n = tr.samples.size();
    Mat2 normal = Mat2::Zero();
    Vec2 rhs = Vec2::Zero();
    for (const auto& s : tr.samples) {
      const double t_r = s.t - tr.t_e;
      const double tau = envelope == EnvelopeMode::literal ? t_r : std::abs(t_r);
      const double env = std::exp(-rate * tau);
      const Vec2 h(-g * std::sin(omega * t_r) * env, g * std::cos(omega * t_r) * env);
      normal += s.n_photons * h * h.transpose();
      rhs += s.n_photons * (s.phi - phi0) * h;
    }
    if (n < 3 || reciprocal_condition(normal) <= 1.0 / kMaxConditionNumber) {
      throw Error(ErrorCode::identifiability,
                  "trial " + std::to_string(tr.trial) + ": FID amplitudes are not identifiable");
    }
    const Eigen::LDLT<Mat2> solver(normal);
    const Vec2 amp = solver.solve(rhs);

    Mat3 vtv = Mat3::Zero();
    Eigen::Matrix<double, 2, 3> htv = Eigen::Matrix<double, 2, 3>::Zero();
    for (const auto& s : tr.samples) {
      const double t_r = s.t - tr.t_e;
      const double tau = envelope == EnvelopeMode::literal ? t_r : std::abs(t_r);
      const double env = std::exp(-rate * tau);
      const double c = std::cos(omega * t_r);
      const double sn = std::sin(omega * t_r);
      const Vec2 h(-g * sn * env, g * c * env);
      const double model = h.dot(amp);
      const double sw = std::sqrt(s.n_photons);
      const double r = sw * (s.phi - phi0 - model);
      ev.cost += r * r;
      ev.sum_w += s.n_photons;
      if (!with_jacobian) continue;
      const Vec3 v = sw * Vec3(-g * t_r * env * (amp[0] * c + amp[1] * sn), -tau * model, 1.0);
      vtv += v * v.transpose();
      htv += (sw * h) * v.transpose();
      ev.vtr += v * r;
    }
    if (with_jacobian) ev.jtj += vtv - htv.transpose() * solver.solve(htv);
  }
  ev.jtj = 0.5 * (ev.jtj + ev.jtj.transpose());
  return ev;
}

double scaled_gradient(const Evaluation& ev, const std::array<bool, 3>& free) {
  const double rnorm = std::sqrt(ev.cost);
  if (rnorm == 0.0) return 0.0;
  double worst = 0.0;
  for (int j = 0; j < 3; ++j) {
    if (!free[j]) continue;
    const double d = std::sqrt(ev.jtj(j, j));
    if (d == 0.0) continue;
    worst = std::max(worst, std::abs(ev.vtr[j]) / (d * rnorm));
  }
  return worst;
}

}  // namespace

ClassicalFit fit_classical_params(std::span<const Trace> traces, const ClassicalParams& start,
                                  const FitOptions& options) {
  start.validate();
  require(!traces.empty(), ErrorCode::invalid_argument, "no traces to fit");
  require(start.larmor_omega > 0.0, ErrorCode::invalid_argument,
          "FID fit needs a positive starting Larmor frequency");

  bool any_long = false;
  bool any_signal = false;
  std::size_t n_samples = 0;
  for (const auto& tr : traces) {
    tr.validate();
    n_samples += tr.samples.size();
    if (tr.samples.size() < 2) continue;
    const double span = tr.samples.back().t - tr.samples.front().t;
    if (start.larmor_omega * span >= 4.0 * M_PI) any_long = true;
    for (const auto& s : tr.samples) {
      if (s.phi != tr.samples.front().phi) {
        any_signal = true;
        break;
      }
    }
  }
  require(any_long, ErrorCode::invalid_argument, "FID fit needs a trace spanning >= 2 Larmor periods");
  require(any_signal, ErrorCode::identifiability,
          "constant signal: Larmor frequency and T2 are not identifiable");

  const double g = start.g;
  Vec3 theta(start.larmor_omega, std::isfinite(start.t2) ? 1.0 / start.t2 : 0.0, start.phi0);

  if (options.scan_frequency && options.scan_points > 1) {
    double best_cost = std::numeric_limits<double>::infinity();
    double best_omega = theta[0];
    for (int i = 0; i < options.scan_points; ++i) {
      const double frac = -1.0 + 2.0 * i / (options.scan_points - 1);
      Vec3 trial = theta;
      trial[0] = start.larmor_omega * (1.0 + options.scan_span * frac);
      const double cost = evaluate(traces, g, trial, start.envelope, false).cost;
      if (cost < best_cost) {
        best_cost = cost;
        best_omega = trial[0];
      }
    }
    theta[0] = best_omega;
  }

  Evaluation ev = evaluate(traces, g, theta, start.envelope, true);
  double lambda = 1e-3;
  int iter = 0;
  bool converged = false;
  std::array<bool, 3> free{true, true, true};
  double grad = 0.0;
  for (; iter < options.max_iterations; ++iter) {
    // Decay rate pinned at zero when the data pull it negative.
    free[1] = !(theta[1] <= 0.0 && ev.vtr[1] < 0.0);
    grad = scaled_gradient(ev, free);
    if (grad < options.gradient_tol) {
      converged = true;
      break;
    }
    bool stepped = false;
    while (lambda < 1e16) {
      Mat3 a = ev.jtj;
      Vec3 b = ev.vtr;
      Vec3 d = a.diagonal().cwiseSqrt();
      for (int j = 0; j < 3; ++j) {
        if (d[j] == 0.0) d[j] = 1.0;
        if (!free[j]) {
          a.row(j).setZero();
          a.col(j).setZero();
          a(j, j) = d[j] * d[j];
          b[j] = 0.0;
        }
      }
      const Mat3 dinv = d.cwiseInverse().asDiagonal();
      Mat3 scaled = dinv * a * dinv;
      scaled.diagonal().array() += lambda * scaled.diagonal().array();
      const Vec3 step = dinv * scaled.ldlt().solve(dinv * b);
      Vec3 next = theta + step;
      next[1] = std::max(next[1], 0.0);
      const double cost = evaluate(traces, g, next, start.envelope, false).cost;
      if (std::isfinite(cost) && cost < ev.cost) {
        theta = next;
        ev = evaluate(traces, g, theta, start.envelope, true);
        lambda = std::max(lambda * 0.1, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // Not even a tiny damped step lowers the cost: a minimum to rounding.
      converged = true;
      break;
    }
  }
  if (!converged) {
    free[1] = !(theta[1] <= 0.0 && ev.vtr[1] < 0.0);
    grad = scaled_gradient(ev, free);
    converged = grad < options.gradient_tol;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "FID fit did not converge after " << iter << " iterations (scaled gradient " << grad
        << ", omega " << theta[0] << " rad/s, decay rate " << theta[1] << " 1/s, phi0 " << theta[2]
        << " rad, chi2 " << ev.cost << ")";
    throw Error(ErrorCode::fit, msg.str());
  }

  // Rank check on the column-normalised information matrix.
  Vec3 d = ev.jtj.diagonal().cwiseSqrt();
  for (int j = 0; j < 3; ++j) {
    if (free[j]) {
      require(d[j] > 0.0, ErrorCode::identifiability, "FID fit Jacobian is rank deficient");
    } else {
      d[j] = 1.0;
    }
  }
  Mat3 corr = d.cwiseInverse().asDiagonal() * ev.jtj * d.cwiseInverse().asDiagonal();
  for (int j = 0; j < 3; ++j) {
    if (!free[j]) {
      corr.row(j).setZero();
      corr.col(j).setZero();
      corr(j, j) = 1.0;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(corr, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 1e-14 * es.eigenvalues().maxCoeff(),
          ErrorCode::identifiability, "FID fit Jacobian is rank deficient");

  ClassicalFit fit;
  fit.params = start;
  fit.params.larmor_omega = theta[0];
  fit.params.t2 = theta[1] > 0.0 ? 1.0 / theta[1] : std::numeric_limits<double>::infinity();
  fit.params.phi0 = theta[2];
  fit.iterations = iter;
  fit.scaled_gradient = grad;
  fit.chi2 = ev.cost;
  fit.dof = static_cast<int>(n_samples) - 3 - 2 * static_cast<int>(traces.size());
  const double s2 = fit.dof > 0 ? ev.cost / fit.dof : 0.0;
  const Mat3 cov = s2 * (d.cwiseInverse().asDiagonal() * corr.inverse() * d.cwiseInverse().asDiagonal());
  fit.omega_std_err = std::sqrt(cov(0, 0));
  fit.t2_std_err = free[1] && theta[1] > 0.0 ? std::sqrt(cov(1, 1)) / (theta[1] * theta[1])
                                            : std::numeric_limits<double>::infinity();
  fit.phi0_std_err = std::sqrt(cov(2, 2));
  return fit;
}

Mat2 sample_covariance(std::span<const Vec2> values) {
  const auto n = values.size();
  require(n >= 2, ErrorCode::invalid_argument, "sample covariance needs at least 2 values");
  Vec2 mean = Vec2::Zero();
  for (const auto& v : values) mean += v;
  mean /= static_cast<double>(n);
  Mat2 cov = Mat2::Zero();
  for (const auto& v : values) cov += (v - mean) * (v - mean).transpose();
  return cov / static_cast<double>(n - 1);
}

namespace {

using Mat4 = Eigen::Matrix4d;

Mat2 schur(const Mat4& c) {
  const Mat2 g11 = c.block<2, 2>(0, 0);
  const Mat2 g22 = c.block<2, 2>(2, 2);
  const Mat2 g21 = c.block<2, 2>(2, 0);
  Mat2 out = g22 - g21 * g11.inverse() * g21.transpose();
  return 0.5 * (out + out.transpose());
}

void check_invertible(const Mat2& g11) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(g11, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  require(lo > 0.0 && hi / lo < kMaxConditionNumber, ErrorCode::conditioning,
          "covariance of F1 is singular (condition number above 1e12)");
}

}  // namespace

ConditionalStats conditional_covariance(std::span<const EstimatePair> pairs) {
  const auto n = pairs.size();
  require(n >= 2, ErrorCode::invalid_argument, "conditional covariance needs at least 2 trials");
  ConditionalStats st;
  st.n_trials = static_cast<int>(n);
  for (const auto& p : pairs) {
    st.mean_f1 += p.f1;
    st.mean_f2 += p.f2;
  }
  st.mean_f1 /= static_cast<double>(n);
  st.mean_f2 /= static_cast<double>(n);

  std::vector<Eigen::Vector4d> centered(n);
  Mat4 scatter = Mat4::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] << pairs[i].f1 - st.mean_f1, pairs[i].f2 - st.mean_f2;
    scatter += centered[i] * centered[i].transpose();
  }
  const Mat4 cov = scatter / static_cast<double>(n - 1);
  st.gamma_f1 = cov.block<2, 2>(0, 0);
  st.gamma_f2 = cov.block<2, 2>(2, 2);
  st.gamma_cross = cov.block<2, 2>(2, 0);

  if (cov.isZero(0.0)) {
    // Deterministic data: nothing to predict and nothing left over.
    st.residuals.assign(n, Vec2::Zero());
    return st;
  }
  check_invertible(st.gamma_f1);
  st.gamma_cond = schur(cov);
  const Mat2 predictor = st.gamma_cross * st.gamma_f1.inverse();
  st.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    st.residuals[i] = centered[i].tail<2>() - predictor * centered[i].head<2>();
  }

  if (n >= 4) {
    // Delete-one jackknife; the leave-one-out scatter of centred data is
    // scatter - x x^T n/(n-1).
    const double nn = static_cast<double>(n);
    std::vector<Mat2> loo(n);
    Mat2 loo_mean = Mat2::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Mat4 c = (scatter - centered[i] * centered[i].transpose() * (nn / (nn - 1.0))) / (nn - 2.0);
      loo[i] = schur(c);
      loo_mean += loo[i];
    }
    loo_mean /= nn;
    Mat2 var = Mat2::Zero();
    for (const auto& m : loo) var += (m - loo_mean).cwiseAbs2();
    st.std_err = (var * ((nn - 1.0) / nn)).cwiseSqrt();
  }
  return st;
}

Mat2 readout_noise(std::span<const Trace> no_atom_traces, const Window& window, double t_e,
                   const ClassicalParams& params) {
  std::vector<Vec2> est;
  est.reserve(no_atom_traces.size());
  for (const auto& tr : no_atom_traces) {
    require(tr.label == TraceLabel::no_atoms, ErrorCode::invalid_argument,
            "readout noise needs traces recorded without atoms");
    est.push_back(estimate_window(tr, window, t_e, params).f);
  }
  return sample_covariance(est);
}

}  // namespace pqs
