#include "trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace pqs {

std::string format_sig9(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

namespace {

double reparse(double value) { return std::stod(format_sig9(value)); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& why) {
  throw Error(ErrorCode::parse, source + ":" + std::to_string(line) + ": " + why);
}

double to_double(const std::string& s, const std::string& source, std::size_t line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    parse_fail(source, line, "invalid number '" + s + "'");
  }
  return v;
}

}  // namespace

void quantize_for_csv(Trace& trace) {
  for (auto& s : trace.samples) {
    s.t = reparse(s.t * 1e6) * 1e-6;
    s.phi = reparse(s.phi);
    s.n_photons = reparse(s.n_photons);
  }
}

void write_traces_csv(std::ostream& os, const std::vector<Trace>& traces) {
  os << kTraceCsvHeader << '\n';
  for (const auto& tr : traces) {
    for (const auto& s : tr.samples) {
      os << format_sig9(s.t * 1e6) << ',' << format_sig9(s.phi) << ',' << format_sig9(s.n_photons)
         << ',' << to_string(tr.label) << ',' << tr.trial << '\n';
    }
  }
}

void write_traces_csv(const std::string& path, const std::vector<Trace>& traces) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorCode::io, "cannot open '" + path + "' for writing");
  write_traces_csv(os, traces);
  require(static_cast<bool>(os), ErrorCode::io, "failed writing '" + path + "'");
}

std::vector<Trace> read_traces_csv(std::istream& is, const std::string& source, double t_e) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) parse_fail(source, 1, "empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) {
    parse_fail(source, lineno, std::string("expected header '") + kTraceCsvHeader + "'");
  }

  std::map<std::pair<int, int>, Trace> grouped;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) {
      parse_fail(source, lineno, "expected 5 fields, found " + std::to_string(f.size()));
    }
    TraceSample s;
    s.t = to_double(f[0], source, lineno) * 1e-6;
    s.phi = to_double(f[1], source, lineno);
    s.n_photons = to_double(f[2], source, lineno);
    TraceLabel label;
    try {
      label = parse_trace_label(f[3]);
    } catch (const Error& e) {
      parse_fail(source, lineno, e.what());
    }
    int trial = 0;
    auto [ptr, ec] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), trial);
    if (ec != std::errc() || ptr != f[4].data() + f[4].size() || f[4].empty()) {
      parse_fail(source, lineno, "invalid trial index '" + f[4] + "'");
    }
    if (!std::isfinite(s.phi) || !std::isfinite(s.t) || !(s.n_photons > 0.0)) {
      parse_fail(source, lineno, "non-finite time/angle or non-positive photon number");
    }
    const int label_key = label == TraceLabel::with_atoms ? 0 : 1;
    auto& tr = grouped[{label_key, trial}];
    tr.label = label;
    tr.trial = trial;
    tr.t_e = t_e;
    tr.samples.push_back(s);
  }
  if (is.bad()) throw Error(ErrorCode::io, "read error on " + source);

  std::vector<Trace> out;
  out.reserve(grouped.size());
  for (auto& [key, tr] : grouped) {
    std::sort(tr.samples.begin(), tr.samples.end(),
              [](const TraceSample& a, const TraceSample& b) { return a.t < b.t; });
    for (std::size_t k = 1; k < tr.samples.size(); ++k) {
      if (tr.samples[k].t == tr.samples[k - 1].t) {
        throw Error(ErrorCode::parse, source + ": duplicate sample time in " +
                                          to_string(tr.label) + " trial " + std::to_string(tr.trial));
      }
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<Trace> read_traces_csv(const std::string& path, double t_e) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorCode::io, "cannot open trace file '" + path + "'");
  return read_traces_csv(is, path, t_e);
}

}  // namespace pqs
