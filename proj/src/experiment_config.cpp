#include "experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace pqs {

const char* to_string(RunMethod method) {
  return method == RunMethod::sampled ? "sampled" : "analytic";
}

void ExperimentConfig::validate() const {
  require(std::isfinite(n_atoms) && n_atoms >= 0.0, ErrorCode::config, "n_atoms must be >= 0");
  require(trials >= 2, ErrorCode::config, "trials must be >= 2");
  require(pulse_period_us > 0.0, ErrorCode::config, "pulse_period_us must be > 0");
  require(window_us > 0.0, ErrorCode::config, "window_us must be > 0");
  const double slots = window_us / pulse_period_us;
  require(std::abs(slots - std::round(slots)) < 1e-9 * slots && std::round(slots) >= 1.0,
          ErrorCode::config, "window_us must be a positive multiple of pulse_period_us");
  require(std::isfinite(t_e_us), ErrorCode::config, "t_e_us must be finite");
  require(sss_g_rad_per_spin >= 0.0, ErrorCode::config, "sss_g_rad_per_spin must be >= 0");
  require(atom_jitter >= 0.0 && atom_jitter < 1.0, ErrorCode::config, "atom_jitter must lie in [0, 1)");
  require(larmor_jitter_khz >= 0.0, ErrorCode::config, "larmor_jitter_khz must be >= 0");
  require(grid_points >= 1, ErrorCode::config, "grid_points must be >= 1");
  require(threads >= 0, ErrorCode::config, "threads must be >= 0");
  for (double n : scan_n_atoms) {
    require(std::isfinite(n) && n > 0.0, ErrorCode::config, "scan_n_atoms entries must be > 0");
  }
  for (double w : scan_window_us) {
    const double k = w / pulse_period_us;
    require(w > 0.0 && std::abs(k - std::round(k)) < 1e-9 * k, ErrorCode::config,
            "scan_window_us entries must be positive multiples of pulse_period_us");
  }
  if (method == RunMethod::analytic) {
    require(!has_technical_noise() && !photon_poisson && quantum_noise, ErrorCode::config,
            "method = analytic models quantum noise only: jitter, photon_poisson and noise = off "
            "need method = sampled");
  }
  pulse_train().validate();
}

int ExperimentConfig::pulses_per_window() const {
  return static_cast<int>(std::llround(window_us / pulse_period_us));
}

double ExperimentConfig::dephasing_rate() const { return -std::log(eta_dec) / window(); }

double ExperimentConfig::eta_sc() const {
  return std::exp(-eta_per_photon * pulses_per_window() * (n_photons_v + n_photons_h));
}

double ExperimentConfig::probe_photons_per_window() const {
  return pulses_per_window() * n_photons_v;
}

PulseTrainConfig ExperimentConfig::pulse_train() const {
  PulseTrainConfig p;
  p.g = g_rad_per_spin;
  p.n_photons_v = n_photons_v;
  p.n_photons_h = n_photons_h;
  p.pulse_period = pulse_period_us * 1e-6;
  p.pulse_duration = pulse_duration_us * 1e-6;
  p.larmor_omega = 2.0 * M_PI * larmor_khz * 1e3;
  p.t2 = t2_us * 1e-6;
  p.phi0 = phi0_rad;
  p.deco.eta_per_photon = eta_per_photon;
  p.deco.eta_dec = eta_dec;
  p.deco.p_return = p_return;
  p.dephasing_rate = dephasing_rate();
  p.quantum_noise = quantum_noise;
  p.photon_poisson = photon_poisson;
  return p;
}

ClassicalParams ExperimentConfig::nominal_params() const {
  ClassicalParams c;
  c.g = g_rad_per_spin;
  c.larmor_omega = 2.0 * M_PI * larmor_khz * 1e3;
  c.t2 = t2_us * 1e-6;
  c.phi0 = phi0_rad;
  c.envelope = envelope;
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  require(ec == std::errc() && ptr == end && !text.empty() && std::isfinite(v), ErrorCode::config,
          key + ": invalid number '" + text + "'");
  return v;
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& text) {
  Int v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  require(ec == std::errc() && ptr == end && !text.empty(), ErrorCode::config,
          key + ": invalid integer '" + text + "'");
  return v;
}

bool parse_switch(const std::string& key, const std::string& text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw Error(ErrorCode::config, key + ": expected on|off, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, trim(item)));
  require(!out.empty(), ErrorCode::config, key + ": empty list");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fmt(values[i]);
  }
  return out;
}

struct Key {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define PQS_NUMBER_KEY(name)                                                                  \
  {                                                                                           \
    #name, Key {                                                                              \
      [](ExperimentConfig& c, const std::string& v) { c.name = parse_number(#name, v); },     \
          [](const ExperimentConfig& c) { return fmt(c.name); }                               \
    }                                                                                         \
  }

const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = {
      PQS_NUMBER_KEY(n_atoms),
      {"trials", {[](ExperimentConfig& c, const std::string& v) { c.trials = parse_integer<int>("trials", v); },
                  [](const ExperimentConfig& c) { return std::to_string(c.trials); }}},
      PQS_NUMBER_KEY(window_us),
      PQS_NUMBER_KEY(t_e_us),
      PQS_NUMBER_KEY(pulse_period_us),
      PQS_NUMBER_KEY(pulse_duration_us),
      PQS_NUMBER_KEY(n_photons_v),
      PQS_NUMBER_KEY(n_photons_h),
      PQS_NUMBER_KEY(g_rad_per_spin),
      PQS_NUMBER_KEY(larmor_khz),
      PQS_NUMBER_KEY(t2_us),
      PQS_NUMBER_KEY(phi0_rad),
      PQS_NUMBER_KEY(eta_per_photon),
      PQS_NUMBER_KEY(eta_dec),
      PQS_NUMBER_KEY(p_return),
      {"mode", {[](ExperimentConfig& c, const std::string& v) { c.mode = parse_subtraction_mode(v); },
                [](const ExperimentConfig& c) {
                  return std::string(c.mode == SubtractionMode::raw ? "raw" : "subtracted");
                }}},
      {"master_seed",
       {[](ExperimentConfig& c, const std::string& v) {
          c.master_seed = parse_integer<std::uint64_t>("master_seed", v);
        },
        [](const ExperimentConfig& c) { return std::to_string(c.master_seed); }}},
      PQS_NUMBER_KEY(sss_g_rad_per_spin),
      {"method", {[](ExperimentConfig& c, const std::string& v) {
                    if (v == "sampled") c.method = RunMethod::sampled;
                    else if (v == "analytic") c.method = RunMethod::analytic;
                    else throw Error(ErrorCode::config, "method: expected sampled|analytic, got '" + v + "'");
                  },
                  [](const ExperimentConfig& c) { return std::string(to_string(c.method)); }}},
      {"envelope", {[](ExperimentConfig& c, const std::string& v) { c.envelope = parse_envelope_mode(v); },
                    [](const ExperimentConfig& c) { return std::string(to_string(c.envelope)); }}},
      {"noise", {[](ExperimentConfig& c, const std::string& v) { c.quantum_noise = parse_switch("noise", v); },
                 [](const ExperimentConfig& c) { return std::string(c.quantum_noise ? "on" : "off"); }}},
      {"photon_poisson",
       {[](ExperimentConfig& c, const std::string& v) { c.photon_poisson = parse_switch("photon_poisson", v); },
        [](const ExperimentConfig& c) { return std::string(c.photon_poisson ? "on" : "off"); }}},
      PQS_NUMBER_KEY(atom_jitter),
      PQS_NUMBER_KEY(larmor_jitter_khz),
      {"scan_n_atoms", {[](ExperimentConfig& c, const std::string& v) { c.scan_n_atoms = parse_list("scan_n_atoms", v); },
                        [](const ExperimentConfig& c) { return fmt_list(c.scan_n_atoms); }}},
      {"scan_window_us",
       {[](ExperimentConfig& c, const std::string& v) { c.scan_window_us = parse_list("scan_window_us", v); },
        [](const ExperimentConfig& c) { return fmt_list(c.scan_window_us); }}},
      {"grid_points",
       {[](ExperimentConfig& c, const std::string& v) { c.grid_points = parse_integer<int>("grid_points", v); },
        [](const ExperimentConfig& c) { return std::to_string(c.grid_points); }}},
      {"threads", {[](ExperimentConfig& c, const std::string& v) { c.threads = parse_integer<int>("threads", v); },
                   [](const ExperimentConfig& c) { return std::to_string(c.threads); }}},
  };
  return table;
}

#undef PQS_NUMBER_KEY

const Key* find_key(const std::string& name) {
  for (const auto& [k, key] : keys()) {
    if (k == name) return &key;
  }
  return nullptr;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  require(k != nullptr, ErrorCode::config, "unknown config key '" + key + "'");
  k->set(cfg, trim(value));
}

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::config, where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    require(seen.insert(key).second, ErrorCode::config, where + "duplicate key '" + key + "'");
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      throw Error(ErrorCode::config, where + e.what());
    }
  }
  require(!is.bad(), ErrorCode::io, "read error on " + source);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config, source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorCode::io, "cannot open config file '" + path + "'");
  return parse_config(is, path);
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string out = "# resolved configuration (all keys, defaults expanded)\n";
  for (const auto& [name, key] : keys()) out += name + " = " + key.get(cfg) + "\n";
  return out;
}

}  // namespace pqs
