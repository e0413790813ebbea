#include "pqs/pqs.h"

#include <cmath>
#include <fstream>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "experiment_config.hpp"
#include "harness.hpp"
#include "report_io.hpp"
#include "trace_io.hpp"

struct pqs_config {
  pqs::ExperimentConfig cfg;
  std::string resolved;
};

struct pqs_result {
  pqs::ExperimentConfig cfg;
  std::vector<pqs::Trace> traces;
  pqs::ConditionalStats stats;
  std::optional<pqs::MetricsReport> metrics;  // absent for calibration runs
};

struct pqs_scan {
  pqs::ScanResult scan;
};

namespace {

thread_local std::string last_error;

template <typename F>
pqs_status guarded(F&& body) {
  try {
    body();
    return PQS_OK;
  } catch (const pqs::Error& e) {
    last_error = e.what();
    return static_cast<pqs_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return PQS_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  pqs::require(p != nullptr, pqs::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

void copy_matrix(const pqs::Mat2& m, double out[4]) {
  out[0] = m(0, 0);
  out[1] = m(0, 1);
  out[2] = m(1, 0);
  out[3] = m(1, 1);
}

pqs_metrics to_c(const pqs::MetricsReport& r, const pqs::ConditionalStats& st) {
  pqs_metrics m{};
  m.f_par = r.f_par;
  m.n_atoms_in = r.n_atoms_in;
  m.n_tilde = r.n_tilde;
  m.xi_par_sq = r.xi_par_sq.value;
  m.xi_par_sq_err = r.xi_par_sq.std_err;
  m.xi_y_sq = r.xi_y_sq.value;
  m.xi_y_sq_err = r.xi_y_sq.std_err;
  m.xi_z_sq = r.xi_z_sq.value;
  m.xi_z_sq_err = r.xi_z_sq.std_err;
  m.xi_e_sq = r.xi_e_sq.value;
  m.xi_e_sq_err = r.xi_e_sq.std_err;
  m.xi_m_sq = r.xi_m_sq.value;
  m.xi_m_sq_err = r.xi_m_sq.std_err;
  m.entangled = r.entangled ? 1 : 0;
  m.sql_phase_variance = r.sql;
  m.min_phase_variance = r.min_phase_variance;
  m.trace_gamma_cond = st.gamma_cond.trace();
  return m;
}

template <typename Writer>
void write_file(const char* path, Writer&& writer) {
  need(path, "path");
  std::ostringstream os;
  writer(os);
  pqs::write_text_file(path, os.str());
}

const pqs::MetricsReport& metrics_of(const pqs_result* r) {
  pqs::require(r->metrics.has_value(), pqs::ErrorCode::invalid_argument,
               "result holds a calibration only; no metrics");
  return *r->metrics;
}

}  // namespace

extern "C" {

const char* pqs_version(void) { return "0.1.0"; }

const char* pqs_last_error(void) { return last_error.c_str(); }

const char* pqs_status_name(pqs_status status) {
  switch (status) {
    case PQS_OK: return "ok";
    case PQS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PQS_ERR_CONFIG: return "config error";
    case PQS_ERR_IO: return "i/o error";
    case PQS_ERR_PARSE: return "parse error";
    case PQS_ERR_FIT: return "fit error";
    case PQS_ERR_IDENTIFIABILITY: return "identifiability error";
    case PQS_ERR_CONDITIONING: return "conditioning error";
    case PQS_ERR_DOMAIN: return "domain error";
    case PQS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

pqs_status pqs_config_default(pqs_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new pqs_config{};
  });
}

pqs_status pqs_config_load(const char* path, pqs_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto cfg = pqs::load_config(path);
    *out = new pqs_config{std::move(cfg), {}};
  });
}

pqs_status pqs_config_set(pqs_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "config");
    need(key, "key");
    need(value, "value");
    pqs::ExperimentConfig next = cfg->cfg;
    pqs::set_config_value(next, key, value);
    next.validate();
    cfg->cfg = next;
  });
}

pqs_status pqs_config_resolved(pqs_config* cfg, const char** text) {
  return guarded([&] {
    need(cfg, "config");
    need(text, "text");
    cfg->resolved = pqs::format_config(cfg->cfg);
    *text = cfg->resolved.c_str();
  });
}

pqs_status pqs_config_write(const pqs_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "config");
    need(path, "path");
    pqs::write_text_file(path, pqs::format_config(cfg->cfg));
  });
}

void pqs_config_free(pqs_config* cfg) { delete cfg; }

pqs_status pqs_simulate(const pqs_config* cfg, pqs_result** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = nullptr;
    pqs::RunResult run = pqs::run_trials(cfg->cfg);
    *out = new pqs_result{cfg->cfg, std::move(run.traces), std::move(run.analysis.stats),
                          std::move(run.analysis.metrics)};
  });
}

pqs_status pqs_analyze_files(const pqs_config* cfg, const char* const* trace_paths, size_t n_paths,
                             pqs_result** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = nullptr;
    pqs::require(n_paths > 0 && trace_paths != nullptr, pqs::ErrorCode::invalid_argument,
                 "no trace files given");
    std::vector<pqs::Trace> traces;
    for (size_t i = 0; i < n_paths; ++i) {
      need(trace_paths[i], "trace path");
      auto more = pqs::read_traces_csv(trace_paths[i], cfg->cfg.t_e());
      traces.insert(traces.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
    pqs::Analysis a = pqs::analyze_traces(traces, cfg->cfg);
    *out = new pqs_result{cfg->cfg, std::move(traces), std::move(a.stats), std::move(a.metrics)};
  });
}

pqs_status pqs_stats_load(const pqs_config* cfg, const char* stats_path, pqs_result** out) {
  return guarded([&] {
    need(cfg, "config");
    need(stats_path, "stats path");
    need(out, "out");
    *out = nullptr;
    pqs::ConditionalStats st = pqs::load_stats(stats_path);
    pqs::MetricsReport m = pqs::metrics_from_stats(st, cfg->cfg);
    *out = new pqs_result{cfg->cfg, {}, std::move(st), std::move(m)};
  });
}

pqs_status pqs_calibrate(const pqs_config* cfg, pqs_result** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = nullptr;
    pqs::Calibration cal = pqs::run_calibration(cfg->cfg);
    pqs::ConditionalStats st;
    st.n_trials = cfg->cfg.trials;
    st.gamma_zero = cal.gamma_zero;
    st.has_gamma_zero = true;
    *out = new pqs_result{cfg->cfg, std::move(cal.traces), std::move(st), std::nullopt};
  });
}

pqs_status pqs_result_gamma_cond(const pqs_result* r, double out[4]) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    copy_matrix(r->stats.gamma_cond, out);
  });
}

pqs_status pqs_result_gamma_zero(const pqs_result* r, double out[4]) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    pqs::require(r->stats.has_gamma_zero, pqs::ErrorCode::invalid_argument, "result has no readout noise");
    copy_matrix(r->stats.gamma_zero, out);
  });
}

pqs_status pqs_result_metrics(const pqs_result* r, pqs_metrics* out) {
  return guarded([&] {
    need(r, "result");
    need(out, "out");
    *out = to_c(metrics_of(r), r->stats);
  });
}

pqs_status pqs_result_write_traces(const pqs_result* r, const char* path) {
  return guarded([&] {
    need(r, "result");
    pqs::require(!r->traces.empty(), pqs::ErrorCode::invalid_argument, "result holds no traces");
    write_file(path, [&](std::ostream& os) { pqs::write_traces_csv(os, r->traces); });
  });
}

pqs_status pqs_result_write_stats(const pqs_result* r, const char* path) {
  return guarded([&] {
    need(r, "result");
    write_file(path, [&](std::ostream& os) { pqs::write_stats(os, r->stats); });
  });
}

pqs_status pqs_result_write_metrics(const pqs_result* r, const char* path) {
  return guarded([&] {
    need(r, "result");
    const auto& m = metrics_of(r);
    write_file(path, [&](std::ostream& os) { pqs::write_metrics(os, m); });
  });
}

pqs_status pqs_result_write_phase_curve(const pqs_result* r, const char* path) {
  return guarded([&] {
    need(r, "result");
    metrics_of(r);
    const auto rows = pqs::phase_curve(r->stats, r->cfg);
    write_file(path, [&](std::ostream& os) { pqs::write_phase_curve_csv(os, rows); });
  });
}

void pqs_result_free(pqs_result* r) { delete r; }

static pqs_status run_scan(const pqs_config* cfg, const double* values, size_t n, pqs_scan** out,
                           bool coherence) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = nullptr;
    std::vector<double> list;
    if (values) {
      list.assign(values, values + n);
    } else {
      list = coherence ? cfg->cfg.scan_n_atoms : cfg->cfg.scan_window_us;
    }
    auto scan = coherence ? pqs::scan_coherence(cfg->cfg, list) : pqs::scan_window(cfg->cfg, list);
    *out = new pqs_scan{std::move(scan)};
  });
}

pqs_status pqs_scan_coherence(const pqs_config* cfg, const double* n_atoms, size_t n, pqs_scan** out) {
  return run_scan(cfg, n_atoms, n, out, true);
}

pqs_status pqs_scan_window(const pqs_config* cfg, const double* window_us, size_t n, pqs_scan** out) {
  return run_scan(cfg, window_us, n, out, false);
}

size_t pqs_scan_size(const pqs_scan* scan) { return scan ? scan->scan.points.size() : 0; }

pqs_status pqs_scan_point(const pqs_scan* scan, size_t index, double* axis, pqs_metrics* out) {
  return guarded([&] {
    need(scan, "scan");
    pqs::require(index < scan->scan.points.size(), pqs::ErrorCode::invalid_argument, "scan index out of range");
    const auto& p = scan->scan.points[index];
    if (axis) *axis = p.axis;
    if (out) *out = to_c(p.metrics, p.stats);
  });
}

pqs_status pqs_scan_write_csv(const pqs_scan* scan, const char* path) {
  return guarded([&] {
    need(scan, "scan");
    write_file(path, [&](std::ostream& os) { pqs::write_scan_csv(os, scan->scan); });
  });
}

void pqs_scan_free(pqs_scan* scan) { delete scan; }

}  // extern "C"
