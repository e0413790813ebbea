#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "experiment_config.hpp"
#include "report_io.hpp"
#include "test_util.hpp"
#include "trace_io.hpp"

using namespace pqs;

namespace {

std::vector<Trace> small_traces() {
  PulseTrainConfig cfg;
  std::vector<Trace> out;
  for (int i = 0; i < 3; ++i) {
    Trace tr = simulate_trace(pcss_new(i == 2 ? 0.0 : 1e6), cfg, 0.0, 30e-6, 15e-6, 50 + i).trace;
    tr.trial = i == 2 ? 0 : i;
    out.push_back(tr);
  }
  return out;
}

std::string expect_error(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    CHECK(e.code() == code);
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

}  // namespace

TEST_SUITE("trace_io") {
  TEST_CASE("CSV round trip reproduces quantized traces") {
    auto traces = small_traces();
    for (auto& t : traces) quantize_for_csv(t);
    std::stringstream ss;
    write_traces_csv(ss, traces);
    CHECK(ss.str().rfind("t_us,phi_rad,n_photons,label,trial\n", 0) == 0);
    const auto back = read_traces_csv(ss, "mem", 15e-6);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back[i].label == traces[i].label);
      CHECK(back[i].trial == traces[i].trial);
      CHECK(back[i].t_e == 15e-6);
      REQUIRE(back[i].samples.size() == traces[i].samples.size());
      for (std::size_t k = 0; k < back[i].samples.size(); ++k) {
        CHECK(back[i].samples[k].t == traces[i].samples[k].t);
        CHECK(back[i].samples[k].phi == traces[i].samples[k].phi);
        CHECK(back[i].samples[k].n_photons == traces[i].samples[k].n_photons);
      }
    }
  }

  TEST_CASE("row order does not matter") {
    std::stringstream ss;
    write_traces_csv(ss, small_traces());
    std::vector<std::string> lines;
    std::string line, header;
    std::getline(ss, header);
    while (std::getline(ss, line)) lines.push_back(line);
    std::mt19937 rng(4);
    std::shuffle(lines.begin(), lines.end(), rng);
    std::string shuffled = header + "\n";
    for (const auto& l : lines) shuffled += l + "\n";
    std::stringstream a(ss.str()), b(shuffled);
    std::stringstream again;
    write_traces_csv(again, read_traces_csv(a, "a", 0));
    std::stringstream again2;
    write_traces_csv(again2, read_traces_csv(b, "b", 0));
    CHECK(again.str() == again2.str());
  }

  TEST_CASE("malformed input names the file and line") {
    std::stringstream ss;
    write_traces_csv(ss, small_traces());
    std::string text = ss.str();
    std::string truncated = text.substr(0, text.find('\n', 200) - 5);  // cut mid-row
    std::stringstream t(truncated);
    const auto lines = std::count(truncated.begin(), truncated.end(), '\n') + 1;
    const std::string msg = expect_error([&] { read_traces_csv(t, "cut.csv", 0); }, ErrorCode::parse);
    CHECK(msg.find("cut.csv:" + std::to_string(lines)) != std::string::npos);

    std::stringstream bad_header("t,phi\n1,2\n");
    expect_error([&] { read_traces_csv(bad_header, "h.csv", 0); }, ErrorCode::parse);
    std::stringstream bad_label("t_us,phi_rad,n_photons,label,trial\n1,0.1,100,atoms,0\n");
    CHECK(expect_error([&] { read_traces_csv(bad_label, "l.csv", 0); }, ErrorCode::parse).find("l.csv:2") !=
          std::string::npos);
    std::stringstream dup("t_us,phi_rad,n_photons,label,trial\n1,0.1,100,no_atoms,0\n1,0.2,100,no_atoms,0\n");
    expect_error([&] { read_traces_csv(dup, "d.csv", 0); }, ErrorCode::parse);
    std::stringstream empty("");
    expect_error([&] { read_traces_csv(empty, "e.csv", 0); }, ErrorCode::parse);
    expect_error([] { read_traces_csv("/nonexistent/x.csv", 0); }, ErrorCode::io);
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults match the published setup") {
    const ExperimentConfig c;
    CHECK(c.pulses_per_window() == 90);
    CHECK(c.eta_sc() == doctest::Approx(0.892).epsilon(1e-3));
    CHECK(c.probe_photons_per_window() == doctest::Approx(2.466e8));
    CHECK(std::exp(-c.dephasing_rate() * c.window()) == doctest::Approx(0.93));
    c.validate();
  }

  TEST_CASE("parsing, errors and resolved round trip") {
    std::stringstream ok("# comment\nn_atoms = 1e6  # trailing\ntrials=10\nmode = subtracted\nscan_n_atoms = 1e5, 2e5\n");
    const auto c = parse_config(ok, "ok.cfg");
    CHECK(c.n_atoms == 1e6);
    CHECK(c.trials == 10);
    CHECK(c.mode == SubtractionMode::readout_subtracted);
    CHECK(c.scan_n_atoms == std::vector<double>{1e5, 2e5});

    std::stringstream resolved(format_config(c));
    const auto again = parse_config(resolved, "resolved");
    CHECK(format_config(again) == format_config(c));

    std::stringstream unknown("n_atoms = 1\nbogus = 3\n");
    CHECK(expect_error([&] { parse_config(unknown, "u.cfg"); }, ErrorCode::config).find("u.cfg:2") !=
          std::string::npos);
    std::stringstream dup("trials = 3\ntrials = 4\n");
    expect_error([&] { parse_config(dup, "d.cfg"); }, ErrorCode::config);
    std::stringstream bad("trials = many\n");
    expect_error([&] { parse_config(bad, "b.cfg"); }, ErrorCode::config);
    std::stringstream few("trials = 1\n");
    expect_error([&] { parse_config(few, "f.cfg"); }, ErrorCode::config);
    std::stringstream odd("window_us = 100\n");
    expect_error([&] { parse_config(odd, "o.cfg"); }, ErrorCode::config);
    std::stringstream no_eq("trials 4\n");
    expect_error([&] { parse_config(no_eq, "n.cfg"); }, ErrorCode::config);
    std::stringstream analytic_jitter("method = analytic\natom_jitter = 0.01\n");
    expect_error([&] { parse_config(analytic_jitter, "a.cfg"); }, ErrorCode::config);
    expect_error([] { load_config("/nonexistent/p.cfg"); }, ErrorCode::io);
  }

  TEST_CASE("shipped published config") {
    const auto c = load_config(std::string(PQS_SOURCE_DIR) + "/configs/published.cfg");
    CHECK(c.trials == 450);
    CHECK(c.g_rad_per_spin == 3.08e-7);
  }
}

TEST_SUITE("report_io") {
  TEST_CASE("stats text round trip") {
    ConditionalStats st;
    st.n_trials = 3;
    st.mean_f1 = Vec2(1.23456789e6, -2.5);
    st.gamma_cond << 1.0 / 3.0, 2, 2, 5e5;
    st.std_err << 1, 2, 3, 4;
    st.gamma_zero = Mat2::Identity();
    st.has_gamma_zero = true;
    st.residuals = {Vec2(1, 2), Vec2(3, 4), Vec2(-4, -6)};
    std::stringstream ss;
    write_stats(ss, st);
    const auto back = parse_stats(ss, "mem");
    CHECK(back.n_trials == 3);
    CHECK(back.mean_f1 == st.mean_f1);
    CHECK(back.gamma_cond(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(back.std_err == st.std_err);
    CHECK(back.has_gamma_zero);
    CHECK(back.residuals.size() == 3);
    CHECK(back.residuals[2] == Vec2(-4, -6));

    std::stringstream again;
    write_stats(again, back);
    std::stringstream first;
    write_stats(first, st);
    CHECK(again.str() == first.str());
  }

  TEST_CASE("stats parse errors") {
    std::stringstream missing("n_trials: 4\n");
    expect_error([&] { parse_stats(missing, "m"); }, ErrorCode::parse);
    std::stringstream short_mat("n_trials: 4\nmean_f1: 1 0\ngamma_cond: 1 2 3\n");
    expect_error([&] { parse_stats(short_mat, "s"); }, ErrorCode::parse);
    std::stringstream cut("n_trials: 4\nmean_f1: 1 0\ngamma_cond: 1 0 0 1\nresiduals: 3\n1 2\n");
    expect_error([&] { parse_stats(cut, "c"); }, ErrorCode::parse);
    std::stringstream junk("n_trials: 4\nmean_f1: 1 x\ngamma_cond: 1 0 0 1\n");
    CHECK(expect_error([&] { parse_stats(junk, "j"); }, ErrorCode::parse).find("j:2") != std::string::npos);
  }

  TEST_CASE("published stats file") {
    const auto st = load_stats(std::string(PQS_SOURCE_DIR) + "/data/published_stats.txt");
    CHECK(st.gamma_cond(0, 0) == 2.32e5);
    CHECK(st.gamma_cond(1, 0) == 0.64e5);
    CHECK(st.has_gamma_zero);
  }

  TEST_CASE("metrics and curve output") {
    MetricsInputs in;
    in.mean = Vec2(1.45e6, 0);
    in.gamma = Vec2(2.32e5, 3.0e5).asDiagonal();
    in.n_atoms_in = 1.75e6;
    in.eta_sc = 0.89;
    in.p_return = 0.55;
    in.grid_points = 5;
    std::stringstream ss;
    write_metrics(ss, compute_metrics(in));
    const std::string text = ss.str();
    CHECK(text.find("xi_par_sq: 0.3669 +- 0") != std::string::npos);
    CHECK(text.find("entangled: yes") != std::string::npos);
    CHECK(text.find("phi_rad,var_phi_rad2") != std::string::npos);
    CHECK(text.find("phi_rad,db_over_pcss") != std::string::npos);

    std::vector<PhaseCurveRow> rows(2);
    rows[0] = {0.1, 1.0, 2.0, std::nullopt, 3.0, std::nullopt};
    std::stringstream csv;
    write_phase_curve_csv(csv, rows);
    CHECK(csv.str().find("\n0.1,1,2,,3,\n") != std::string::npos);
  }
}
