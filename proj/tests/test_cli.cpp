#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "test_util.hpp"

namespace fs = std::filesystem;
using testutil::scratch_dir;
using testutil::slurp;
using testutil::spit;

namespace {

const std::string kSource = PQS_SOURCE_DIR;

struct Run {
  int exit_code;
  std::string out;
  std::string err;
};

// Runs the CLI with `args` (already quoted where needed) from `dir`.
Run cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd \"" + dir.string() + "\" && \"" + PQS_CLI_PATH + "\" " + args +
                          " > stdout.log 2> stderr.log";
  const int status = std::system(cmd.c_str());
  Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "stdout.log"), slurp(dir / "stderr.log")};
  fs::remove(dir / "stdout.log");
  fs::remove(dir / "stderr.log");
  return r;
}

fs::path small_config(const fs::path& dir, int trials) {
  const auto p = dir / "small.cfg";
  spit(p, "# reduced run\ntrials = " + std::to_string(trials) + "\nthreads = 2\nmaster_seed = 7\n");
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 2 and write nothing") {
    const auto dir = scratch_dir("cli_usage");
    auto r = cli(dir, "simulate --config missing.cfg --out out");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("missing.cfg") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out"));

    r = cli(dir, "simulate --config small.cfg --bogus");
    CHECK(r.exit_code == 2);
    r = cli(dir, "");
    CHECK(r.exit_code == 2);

    spit(dir / "bad.cfg", "trials = 10\nwindow_us = oops\n");
    r = cli(dir, "simulate --config bad.cfg --out out");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("bad.cfg:2") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out"));
  }

  TEST_CASE("simulate then analyze reproduces stats and metrics") {
    const auto dir = scratch_dir("cli_roundtrip");
    small_config(dir, 40);
    auto r = cli(dir, "simulate --config small.cfg --out sim");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("xi_par^2") != std::string::npos);
    for (const char* f : {"resolved.cfg", "traces.csv", "stats.txt", "metrics.txt"}) CHECK(fs::exists(dir / "sim" / f));

    r = cli(dir, "analyze --config small.cfg --out ana sim/traces.csv");
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "sim/stats.txt") == slurp(dir / "ana/stats.txt"));
    CHECK(slurp(dir / "sim/metrics.txt") == slurp(dir / "ana/metrics.txt"));

    // Resolved config reproduces the run on its own.
    r = cli(dir, "simulate --config sim/resolved.cfg --out again");
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "sim/stats.txt") == slurp(dir / "again/stats.txt"));

    r = cli(dir, "simulate --config small.cfg --seed 8 --out other");
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "sim/stats.txt") != slurp(dir / "other/stats.txt"));
  }

  TEST_CASE("truncated trace file names the file and line") {
    const auto dir = scratch_dir("cli_truncated");
    small_config(dir, 5);
    REQUIRE(cli(dir, "simulate --config small.cfg --out sim").exit_code == 0);
    const std::string text = slurp(dir / "sim/traces.csv");
    const auto cut = text.find('\n', 200) - 5;
    spit(dir / "cut.csv", text.substr(0, cut));
    std::size_t lines = 1;
    for (std::size_t i = 0; i < cut; ++i) lines += text[i] == '\n';
    const auto r = cli(dir, "analyze --config small.cfg --out ana cut.csv");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("cut.csv:" + std::to_string(lines)) != std::string::npos);
  }

  TEST_CASE("phase curve and metrics from the published stats") {
    const auto dir = scratch_dir("cli_curve");
    const std::string args = "--config \"" + kSource + "/configs/published.cfg\" --stats \"" + kSource +
                             "/data/published_stats.txt\"";
    auto r = cli(dir, "phase-curve " + args + " --out curve");
    REQUIRE(r.exit_code == 0);
    std::istringstream csv(slurp(dir / "curve/phase_curve.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "phi_rad,var_phi_pqs_rad2,var_phi_pcss_rad2,var_phi_sss_rad2,db_pqs,db_sss");
    double best = 1e300, min_db = 1e300, pcss_at_zero = 0, closest = 1e300;
    int rows = 0;
    while (std::getline(csv, line)) {
      ++rows;
      std::vector<std::string> f;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) f.push_back(cell);
      f.resize(6);
      const double phi = std::stod(f[0]);
      if (!f[1].empty()) best = std::min(best, std::stod(f[1]));
      if (!f[4].empty()) min_db = std::min(min_db, std::stod(f[4]));
      if (std::abs(phi) < closest && !f[2].empty()) {
        closest = std::abs(phi);
        pcss_at_zero = std::stod(f[2]);
      }
    }
    CHECK(rows == 721);
    CHECK(std::sqrt(best) == doctest::Approx(3.6e-4).epsilon(0.05));
    CHECK(pcss_at_zero == doctest::Approx(1 / (2 * 1.75e6)).epsilon(1e-6));
    CHECK(min_db >= 2.5);

    r = cli(dir, "metrics " + args + " --out met");
    REQUIRE(r.exit_code == 0);
    const std::string m = slurp(dir / "met/metrics.txt");
    const auto pos = m.find("xi_par_sq: ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(m.substr(pos + 11)) < 1.0);
    CHECK(m.find("entangled: yes") != std::string::npos);
  }

  TEST_CASE("calibrate and scans") {
    const auto dir = scratch_dir("cli_scans");
    small_config(dir, 30);
    auto r = cli(dir, "calibrate --config small.cfg --out cal");
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "cal/gamma_zero.txt").find("\ngamma_zero: ") != std::string::npos);
    CHECK(fs::exists(dir / "cal/calibration_traces.csv"));

    spit(dir / "scan.cfg", "trials = 30\nthreads = 2\nscan_n_atoms = 6e5, 1.75e6\n");
    r = cli(dir, "scan-coherence --config scan.cfg --out scan");
    REQUIRE(r.exit_code == 0);
    std::istringstream csv(slurp(dir / "scan/scan_coherence.csv"));
    std::string line;
    int n = 0;
    while (std::getline(csv, line)) ++n;
    CHECK(n == 3);

    spit(dir / "win.cfg", "method = analytic\n");
    r = cli(dir, "scan-window --config win.cfg --out win");
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(dir / "win/scan_window.csv").rfind("window_us,", 0) == 0);
  }
}
