#include "report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "trace_io.hpp"

namespace pqs {

namespace {

std::string sig4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string join9(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ' ';
    out += format_sig9(v);
  }
  return out;
}

std::string vec_text(const Vec2& v) { return join9({v[0], v[1]}); }
std::string mat_text(const Mat2& m) { return join9({m(0, 0), m(0, 1), m(1, 0), m(1, 1)}); }

std::vector<double> numbers(const std::string& text, const std::string& where) {
  std::istringstream ss(text);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse, where + "invalid number '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

void write_stats(std::ostream& os, const ConditionalStats& st) {
  os << "# conditional covariance of the M2 estimate given M1; spins, spins^2; matrices row-major "
        "(y, z)\n";
  os << "n_trials: " << st.n_trials << '\n';
  os << "mean_f1: " << vec_text(st.mean_f1) << '\n';
  os << "mean_f2: " << vec_text(st.mean_f2) << '\n';
  os << "gamma_f1: " << mat_text(st.gamma_f1) << '\n';
  os << "gamma_f2: " << mat_text(st.gamma_f2) << '\n';
  os << "gamma_cross: " << mat_text(st.gamma_cross) << '\n';
  os << "gamma_cond: " << mat_text(st.gamma_cond) << '\n';
  os << "gamma_cond_std_err: " << mat_text(st.std_err) << '\n';
  if (st.has_gamma_zero) os << "gamma_zero: " << mat_text(st.gamma_zero) << '\n';
  os << "residuals: " << st.residuals.size() << '\n';
  for (const auto& r : st.residuals) os << vec_text(r) << '\n';
}

ConditionalStats parse_stats(std::istream& is, const std::string& source) {
  ConditionalStats st;
  std::map<std::string, std::vector<double>> fields;
  std::string line;
  int lineno = 0;
  std::size_t residuals_left = 0;
  bool in_residuals = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (in_residuals && residuals_left > 0) {
      const auto v = numbers(line, where);
      require(v.size() == 2, ErrorCode::parse, where + "residual row needs 2 values");
      st.residuals.emplace_back(v[0], v[1]);
      --residuals_left;
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    require(colon != std::string::npos, ErrorCode::parse, where + "expected 'key: values'");
    const std::string key = line.substr(0, colon);
    const auto v = numbers(line.substr(colon + 1), where);
    require(!fields.count(key), ErrorCode::parse, where + "duplicate key '" + key + "'");
    if (key == "residuals") {
      require(v.size() == 1 && v[0] >= 0.0, ErrorCode::parse, where + "residuals needs a row count");
      residuals_left = static_cast<std::size_t>(v[0]);
      in_residuals = true;
    }
    std::size_t expected = 0;
    if (key == "n_trials" || key == "residuals") expected = 1;
    else if (key == "mean_f1" || key == "mean_f2") expected = 2;
    else if (key == "gamma_f1" || key == "gamma_f2" || key == "gamma_cross" || key == "gamma_cond" ||
             key == "gamma_cond_std_err" || key == "gamma_zero") expected = 4;
    require(expected != 0, ErrorCode::parse, where + "unknown key '" + key + "'");
    require(v.size() == expected, ErrorCode::parse,
            where + key + " needs " + std::to_string(expected) + " values");
    fields[key] = v;
  }
  require(residuals_left == 0, ErrorCode::parse, source + ": truncated residual block");
  for (const char* key : {"n_trials", "mean_f1", "gamma_cond"}) {
    require(fields.count(key), ErrorCode::parse, source + ": missing '" + key + "'");
  }
  auto mat = [&](const char* key, Mat2& m) {
    if (!fields.count(key)) return false;
    const auto& v = fields[key];
    m << v[0], v[1], v[2], v[3];
    return true;
  };
  auto vec = [&](const char* key, Vec2& out) {
    if (fields.count(key)) out = Vec2(fields[key][0], fields[key][1]);
  };
  st.n_trials = static_cast<int>(fields["n_trials"][0]);
  vec("mean_f1", st.mean_f1);
  vec("mean_f2", st.mean_f2);
  mat("gamma_f1", st.gamma_f1);
  mat("gamma_f2", st.gamma_f2);
  mat("gamma_cross", st.gamma_cross);
  mat("gamma_cond", st.gamma_cond);
  mat("gamma_cond_std_err", st.std_err);
  st.has_gamma_zero = mat("gamma_zero", st.gamma_zero);
  return st;
}

ConditionalStats load_stats(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::io, "cannot open stats file '" + path + "'");
  return parse_stats(is, path);
}

void write_metrics(std::ostream& os, const MetricsReport& r) {
  auto pm = [&](const char* key, const ValueWithError& v) {
    os << key << ": " << sig4(v.value) << " +- " << sig4(v.std_err) << '\n';
  };
  os << "# squeezing metrics; covariance mode " << to_string(r.subtraction_mode) << '\n';
  os << "f_par_spins: " << sig4(r.f_par) << '\n';
  os << "n_atoms_in_spins: " << sig4(r.n_atoms_in) << '\n';
  os << "n_tilde_spins: " << sig4(r.n_tilde) << '\n';
  pm("xi_par_sq", r.xi_par_sq);
  pm("xi_y_sq", r.xi_y_sq);
  pm("xi_z_sq", r.xi_z_sq);
  pm("xi_e_sq", r.xi_e_sq);
  os << "entangled: " << (r.entangled ? "yes" : "no") << " (threshold 7/16)\n";
  pm("xi_m_sq", r.xi_m_sq);
  os << "sql_phase_variance_rad2: " << sig4(r.sql) << '\n';
  os << "min_phase_variance_rad2: " << sig4(r.min_phase_variance) << '\n';
  os << "min_delta_phi_rad: " << sig4(std::sqrt(std::max(r.min_phase_variance, 0.0))) << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? sig4(*v) : std::string(); };
  os << "\nphase_curve: " << r.phase_curve.size() << "\nphi_rad,var_phi_rad2\n";
  for (const auto& p : r.phase_curve) os << format_sig9(p.phi) << ',' << opt(p.value) << '\n';
  os << "\nenhancement_db: " << r.enhancement_db.size() << "\nphi_rad,db_over_pcss\n";
  for (const auto& p : r.enhancement_db) os << format_sig9(p.phi) << ',' << opt(p.db) << '\n';
}

void write_scan_csv(std::ostream& os, const ScanResult& scan) {
  os << scan.axis_name << ",xi_par_sq,xi_par_sq_stderr,trace_gamma_cond_spins2,f_par_spins,xi_e_sq\n";
  for (const auto& p : scan.points) {
    os << format_sig9(p.axis) << ',' << format_sig9(p.metrics.xi_par_sq.value) << ','
       << format_sig9(p.metrics.xi_par_sq.std_err) << ',' << format_sig9(p.stats.gamma_cond.trace()) << ','
       << format_sig9(p.metrics.f_par) << ',' << format_sig9(p.metrics.xi_e_sq.value) << '\n';
  }
}

void write_phase_curve_csv(std::ostream& os, const std::vector<PhaseCurveRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? format_sig9(*v) : std::string(); };
  os << "phi_rad,var_phi_pqs_rad2,var_phi_pcss_rad2,var_phi_sss_rad2,db_pqs,db_sss\n";
  for (const auto& r : rows) {
    os << format_sig9(r.phi) << ',' << opt(r.pqs) << ',' << opt(r.pcss) << ',' << opt(r.sss) << ','
       << opt(r.db_pqs) << ',' << opt(r.db_sss) << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::io, "cannot open '" + path + "' for writing");
  os << text;
  os.flush();
  require(static_cast<bool>(os), ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace pqs
