#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fid_estimator.hpp"
#include "harness.hpp"
#include "squeezing_metrics.hpp"

namespace pqs {

/// `key: values` text, 9 significant digits, matrices row-major, followed by
/// the per-trial residual block.
void write_stats(std::ostream& os, const ConditionalStats& stats);

/// Reads write_stats output. n_trials, mean_f1 and gamma_cond are required;
/// the other keys default to zero (gamma_zero to absent).
ConditionalStats parse_stats(std::istream& is, const std::string& source);
ConditionalStats load_stats(const std::string& path);

/// Metrics as `key: value` lines (4 significant digits, with standard
/// errors), then the phase curve and enhancement as two-column CSV blocks.
void write_metrics(std::ostream& os, const MetricsReport& report);

/// axis, xi_par_sq, stderr, Tr(gamma_cond), F_par, xi_e_sq per point.
void write_scan_csv(std::ostream& os, const ScanResult& scan);

/// phi, the three phase variances and both enhancements; divergent points
/// are left empty.
void write_phase_curve_csv(std::ostream& os, const std::vector<PhaseCurveRow>& rows);

/// Writes `text` to `path`, raising an io error on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pqs
