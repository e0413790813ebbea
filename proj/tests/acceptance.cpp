// Acceptance checks, one line per criterion. With no arguments every
// criterion runs; otherwise only the numbers given on the command line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "experiment_config.hpp"
#include "fid_estimator.hpp"
#include "harness.hpp"
#include "probe_channel.hpp"
#include "report_io.hpp"
#include "spin_state.hpp"
#include "squeezing_metrics.hpp"

using namespace pqs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

const Mat2 kPublished = (Mat2() << 2.32e5, 0.64e5, 0.64e5, 3.00e5).finished();
constexpr double kFpar = 1.45e6;
constexpr double kN = 1.75e6;

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

ExperimentConfig published_config() { return load_config(std::string(PQS_SOURCE_DIR) + "/configs/published.cfg"); }

Outcome metric_reproduction() {
  const ExperimentConfig cfg;
  const auto m = PlanarMoments::from(Vec2(kFpar, 0), kPublished, kN, remaining_atoms(kN, cfg.eta_sc(), cfg.p_return));
  const auto sq = xi_parallel_sq(m, kPublished, Mat2::Zero(), SubtractionMode::raw);
  const double xm = xi_m_sq(m, kPublished, Mat2::Zero(), SubtractionMode::raw);
  const bool ok = within(sq.xi_par_sq, 0.367, 0.005) && within(sq.xi_y_sq, 0.320, 0.005) &&
                  within(sq.xi_z_sq, 0.414, 0.007) && within(xm, 0.443, 0.005);
  return {ok, fmt("xi_par^2 %.4f, xi_y^2 %.4f, xi_z^2 %.4f, xi_m^2 %.4f", sq.xi_par_sq, sq.xi_y_sq,
                  sq.xi_z_sq, xm)};
}

Outcome phase_sensitivity() {
  const auto al = align_coherence(Vec2(kFpar, 0), kPublished);
  const double var = min_phase_variance_aligned(al);
  const double dphi = std::sqrt(var);
  const double ratio = var / sql_phase_variance(kFpar);
  const bool ok = std::abs(dphi / 3.6e-4 - 1) <= 0.05 && ratio >= 0.37 && ratio <= 0.40;
  return {ok, fmt("dphi %.4g rad, var/SQL %.4f", dphi, ratio)};
}

Outcome scattering() {
  const ExperimentConfig cfg;
  const double photons = cfg.pulses_per_window() * (cfg.n_photons_v + cfg.n_photons_h);
  DecoherenceParams deco;
  deco.eta_per_photon = cfg.eta_per_photon;
  const auto s = apply_scattering(pcss_new(kN), photons, deco);
  const double survival = s.planar_mean().norm() / kN;
  const bool ok = within(survival, 0.89, 0.005) && std::abs(cfg.eta_sc() - survival) < 1e-12;
  return {ok, fmt("%.0f photons, coherence survival %.4f", photons, survival)};
}

Outcome sss_reference_check() {
  const ExperimentConfig cfg;
  const auto sss = sss_reference(cfg.n_atoms, cfg.sss_g_rad_per_spin, cfg.probe_photons_per_window(), cfg.eta_sc());
  const auto pcss = pcss_reference(cfg.n_atoms);
  const double db = 10 * std::log10(pcss(0.0) / sss(0.0));
  return {within(db, 6.6, 0.3),
          fmt("N_L %.3g, eta_sc %.3f, enhancement at phi=0 %.2f dB", cfg.probe_photons_per_window(),
              cfg.eta_sc(), db)};
}

Outcome kalman_batch() {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  const int instances = 200;
  for (int i = 0; i < instances; ++i) {
    GaussianSpinState s = pcss_new(1e4 + 2e6 * u(rng));
    const Mat3 a = Mat3::NullaryExpr([&] { return u(rng) - 0.5; });
    s.cov = 1e5 * (a * a.transpose() + 0.05 * Mat3::Identity());
    const Mat3 prior = s.cov;
    const int pulses = 1 + static_cast<int>(10 * u(rng)) % 10;
    const double g = 5e-8 + 5e-7 * u(rng);
    Mat3 frame = Mat3::Identity();
    Eigen::MatrixXd h(pulses, 3);
    Eigen::VectorXd r(pulses);
    for (int k = 0; k < pulses; ++k) {
      const double angle = 2 * M_PI * u(rng);
      s = rotate_about_x(s, angle);
      frame = x_rotation(angle) * frame;
      r[k] = shot_noise_variance(1e5 + 5e6 * u(rng));
      s = kalman_update(s, 1e-4 * (u(rng) - 0.5), g, r[k]);
      h.row(k) = g * frame.row(kZ);
    }
    const Eigen::MatrixXd innov = h * prior * h.transpose() + Eigen::MatrixXd(r.asDiagonal());
    const Mat3 post = prior - prior * h.transpose() * innov.ldlt().solve(h * prior);
    const Mat3 batch = frame * post * frame.transpose();
    worst = std::max(worst, (s.cov - batch).norm() / batch.norm());
  }
  return {worst <= 1e-8, fmt("%.0f instances, worst relative difference %.2e", instances, worst)};
}

Outcome invariants() {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> gauss;
  const int cases = 1000;
  int robertson = 0, ordering = 0, residual = 0, average = 0, period = 0, witness = 0;

  DecoherenceParams deco;
  for (int c = 0; c < cases; ++c) {
    auto s = u(rng) < 0.5 ? pcss_new(1e3 + 1e7 * u(rng)) : css_new(1e3 + 1e7 * u(rng));
    bool ok = true;
    for (int k = 0; k < 20; ++k) {
      const double pick = u(rng);
      if (pick < 0.3) {
        s = rotate_about_x(s, 2 * M_PI * u(rng));
      } else if (pick < 0.5) {
        s = apply_scattering(s, 1e9 * u(rng), deco);
      } else if (pick < 0.6) {
        s = apply_dephasing(s, 0.5 + 0.5 * u(rng));
      } else {
        const double photons = 1e5 + 5e6 * u(rng);
        const double g = 4e-7 * u(rng);
        s = kalman_update(s, g * s.mean[kZ], g, shot_noise_variance(photons));
        s = backaction_inject(s, g, photons);
      }
      ok = ok && satisfies_robertson(s) && relative_min_eigenvalue(s.cov) >= -1e-9;
    }
    robertson += ok;
  }

  for (int c = 0; c < cases; ++c) {
    const int n = 5 + static_cast<int>(200 * u(rng));
    const Mat2 mix = Mat2::NullaryExpr([&] { return u(rng) - 0.5; });
    std::vector<EstimatePair> pairs(static_cast<std::size_t>(n));
    for (auto& p : pairs) {
      p.f1 = Vec2(1e6 + 400 * gauss(rng), 300 * gauss(rng));
      p.f2 = mix * p.f1 + Vec2(100 * gauss(rng), 200 * gauss(rng));
    }
    const auto st = conditional_covariance(pairs);
    Eigen::SelfAdjointEigenSolver<Mat2> es(st.gamma_f2 - st.gamma_cond);
    ordering += es.eigenvalues().minCoeff() >= -1e-9 * st.gamma_f2.trace();
    const Mat2 rc = sample_covariance(st.residuals);
    residual += (rc - st.gamma_cond).norm() <= 1e-8 * st.gamma_cond.norm();
  }

  for (int c = 0; c < cases; ++c) {
    const Mat2 a = Mat2::NullaryExpr([&] { return u(rng) - 0.5; });
    const Mat2 g = 4e5 * a * a.transpose() + 1e3 * Mat2::Identity();
    const Vec2 mean(2e6 * (u(rng) - 0.5), 2e6 * (u(rng) - 0.5));
    const auto m = PlanarMoments::from(mean, g, 2e6, 1.5e6);
    const auto sq = xi_parallel_sq(m, g, Mat2::Zero(), SubtractionMode::raw);
    average += std::abs(sq.xi_par_sq - 0.5 * (sq.xi_y_sq + sq.xi_z_sq)) <= 1e-12 * sq.xi_par_sq;
    const double phi = M_PI * (u(rng) - 0.5) * 0.98;
    const double v0 = phase_variance(mean, g, phi);
    const double v1 = phase_variance(mean, g, phi + M_PI);
    period += std::abs(v0 - v1) <= 1e-10 * v0;
  }

  for (int c = 0; c < cases; ++c) {
    const double n = 10 + 1e7 * u(rng);
    auto s = u(rng) < 0.5 ? css_new(n) : pcss_new(n);
    s = rotate_about_x(s, 2 * M_PI * u(rng));
    const double eta = 0.5 + 0.5 * u(rng);
    const double p = u(rng);
    const auto m = PlanarMoments::from(s.planar_mean(), s.planar_cov(), n, remaining_atoms(n, eta, p));
    witness += !xi_e_sq(m, s.planar_cov(), Mat2::Zero(), SubtractionMode::raw).entangled;
  }

  const bool ok = robertson == cases && ordering == cases && residual == cases && average == cases &&
                  period == cases && witness == cases;
  std::ostringstream d;
  d << "Robertson/PSD " << robertson << ", ordering " << ordering << ", residual identity " << residual
    << ", planar average " << average << ", pi-periodicity " << period << ", witness " << witness
    << " of " << cases << " each";
  return {ok, d.str()};
}

Outcome monte_carlo() {
  const auto cfg = published_config();
  const auto r = run_trials(cfg);
  const Mat2& g = r.analysis.stats.gamma_cond;
  const auto& m = r.analysis.metrics;
  auto factor2 = [](double v, double ref) { return v >= ref / 2 && v <= ref * 2; };
  const bool ok = factor2(g(0, 0), 2.32e5) && factor2(g(1, 1), 3.00e5) && m.xi_par_sq.value < 1 && m.entangled;
  return {ok, fmt("%.0f trials: gamma_cond diag (%.3g, %.3g), xi_par^2 %.3f", cfg.trials, g(0, 0), g(1, 1),
                  m.xi_par_sq.value) +
                  fmt(", xi_e^2 %.3f", m.xi_e_sq.value) + (m.entangled ? " (entangled)" : " (not entangled)")};
}

Outcome coherence_trend() {
  auto cfg = published_config();
  const auto scan = scan_coherence(cfg, cfg.scan_n_atoms);
  auto pts = scan.points;
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.metrics.f_par < b.metrics.f_par; });
  bool consistent = true;
  bool crossed = false;
  std::ostringstream d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& x = pts[i].metrics.xi_par_sq;
    d << (i ? ", " : "") << fmt("F %.3g: %.3f+-%.3f", pts[i].metrics.f_par, x.value, x.std_err);
    if (pts[i].metrics.f_par <= 1e6 && x.value < 1) crossed = true;
    if (i > 0) {
      const auto& prev = pts[i - 1].metrics.xi_par_sq;
      if (x.value > prev.value + 2 * std::hypot(x.std_err, prev.std_err)) consistent = false;
    }
  }
  const auto& lo = pts.front().metrics.xi_par_sq;
  const auto& hi = pts.back().metrics.xi_par_sq;
  const bool overall = hi.value + 3 * std::hypot(lo.std_err, hi.std_err) < lo.value;
  return {pts.size() == 5 && consistent && overall && crossed, d.str()};
}

Outcome phase_curve_shape() {
  const auto stats = load_stats(std::string(PQS_SOURCE_DIR) + "/data/published_stats.txt");
  const ExperimentConfig cfg;
  const auto rows = phase_curve(stats, cfg);
  double min_db = 1e300;
  std::vector<std::size_t> sss_wins;
  std::size_t zero = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (std::abs(row.phi) < std::abs(rows[zero].phi)) zero = i;
    if (row.db_pqs) min_db = std::min(min_db, *row.db_pqs);
    if (row.sss && (!row.pqs || *row.sss < *row.pqs)) sss_wins.push_back(i);
  }
  const bool contiguous = !sss_wins.empty() && sss_wins.back() - sss_wins.front() + 1 == sss_wins.size();
  const bool has_zero = contiguous && sss_wins.front() <= zero && zero <= sss_wins.back();
  const double lo = sss_wins.empty() ? 0 : rows[sss_wins.front()].phi / M_PI;
  const double hi = sss_wins.empty() ? 0 : rows[sss_wins.back()].phi / M_PI;
  const bool inside = lo >= -0.2 && hi <= 0.2;
  return {min_db >= 2.5 && contiguous && has_zero && inside,
          fmt("min PQS gain over PCSS %.2f dB, SSS ahead on [%.3f pi, %.3f pi]", min_db, lo, hi)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "pqs_acceptance_determinism";
  fs::remove_all(root);
  const std::string config = std::string(PQS_SOURCE_DIR) + "/configs/published.cfg";
  for (const char* run : {"a", "b"}) {
    const fs::path out = root / run;
    const std::string cmd = std::string("\"") + PQS_CLI_PATH + "\" simulate --config \"" + config +
                            "\" --threads 4 --out \"" + out.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed: " + cmd};
  }
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(root / "a")) names.insert(e.path().filename().string());
  std::set<std::string> names_b;
  for (const auto& e : fs::directory_iterator(root / "b")) names_b.insert(e.path().filename().string());
  if (names != names_b || names.size() < 4) return {false, "output file sets differ or are incomplete"};
  std::size_t bytes = 0;
  for (const auto& n : names) {
    const auto a = slurp(root / "a" / n);
    if (a != slurp(root / "b" / n)) return {false, n + " differs between runs"};
    bytes += a.size();
  }
  fs::remove_all(root);
  return {true, fmt("%.0f files, %.0f bytes identical with 4 threads", static_cast<double>(names.size()),
                    static_cast<double>(bytes))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "metric reproduction from the published covariance", metric_reproduction},
      {2, "minimum phase uncertainty", phase_sensitivity},
      {3, "scattering survival over one window", scattering},
      {4, "SSS reference enhancement at phi = 0", sss_reference_check},
      {5, "sequential Kalman equals batch conditioning", kalman_batch},
      {6, "invariant suite", invariants},
      {7, "end-to-end Monte Carlo at published parameters", monte_carlo},
      {8, "planar squeezing improves with coherence", coherence_trend},
      {9, "phase-curve shape", phase_curve_shape},
      {10, "byte-identical outputs under parallel trials", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %d: %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
