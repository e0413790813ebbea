#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "probe_channel.hpp"

namespace pqs {

inline constexpr const char* kTraceCsvHeader = "t_us,phi_rad,n_photons,label,trial";

/// Formats with 9 significant digits, the precision used by every text output.
std::string format_sig9(double value);

/// Rounds trace values to what a CSV round trip reproduces, so analysis of
/// in-memory traces and of their files gives identical results.
void quantize_for_csv(Trace& trace);

void write_traces_csv(std::ostream& os, const std::vector<Trace>& traces);
void write_traces_csv(const std::string& path, const std::vector<Trace>& traces);

/// Parses one or more concatenated traces. Rows are grouped by (label,
/// trial) and sorted by time; traces come back ordered by label
/// (with_atoms first) then trial index. Malformed rows raise a parse error
/// naming `source` and the line number.
std::vector<Trace> read_traces_csv(std::istream& is, const std::string& source, double t_e);
std::vector<Trace> read_traces_csv(const std::string& path, double t_e);

}  // namespace pqs
