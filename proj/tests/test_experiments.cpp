#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "erkm/errors.hpp"
#include "erkm/experiments.hpp"

using namespace erkm;

namespace {

StudyConfig small_study(std::string problem = "example1") {
  StudyConfig cfg = StudyConfig::desk_defaults(problem);
  cfg.modes = 16;
  if (problem != "example1") {
    cfg.noise_modes = 16;
    cfg.reference = ReferenceSpec::numerical(SchemeSpec::parse("ewp"), 64);
  }
  cfg.steps_list = {4, 8, 16, 32};
  cfg.realizations = 6;
  cfg.workers = 1;
  return cfg;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("RMS estimates") {
  const std::vector<double> ones{1, 1, 1};
  const RmsEstimate r = rms_from_squared(ones);
  CHECK(r.rms == 1.0);
  CHECK(r.standard_error == 0.0);
  CHECK_THROWS_AS(rms_from_squared(std::vector<double>{}), usage_error);

  const SpectralField a(std::vector<double>{1, 2, 3});
  const std::vector<std::pair<SpectralField, SpectralField>> same{{a, a}, {a, a}};
  const RmsEstimate z = rms_error(same);
  CHECK(z.rms == 0.0);
  CHECK(z.standard_error == 0.0);
  CHECK(h_distance_squared(a, SpectralField(std::vector<double>{1, 2, 5})) == 4.0);
}

TEST_CASE("RMS of synthetic Gaussian errors") {
  // Errors with iid N(0, s^2) coefficients in 3 modes: E||e||^2 = 3 s^2.
  const double s = 0.2;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z(0.0, s);
  std::vector<std::pair<SpectralField, SpectralField>> pairs;
  for (int r = 0; r < 10000; ++r) {
    SpectralField e(3);
    for (auto& x : e) x = z(rng);
    pairs.emplace_back(e, SpectralField(3));
  }
  const RmsEstimate est = rms_error(pairs);
  CHECK(std::abs(est.rms - std::sqrt(3.0) * s) <= 3 * est.standard_error);
  CHECK(est.standard_error > 0.0);
}

TEST_CASE("power-law fits") {
  std::vector<double> h, e15, e05;
  for (int l = 2; l <= 10; ++l) {
    h.push_back(std::ldexp(1.0, -l));
    e15.push_back(0.3 * std::pow(h.back(), 1.5));
    e05.push_back(2.0 * std::pow(h.back(), 0.5));
  }
  const OrderFit f = fit_power_law(h, e15);
  CHECK(std::abs(f.slope - 1.5) <= 1e-12);
  CHECK(f.intercept == doctest::Approx(std::log(0.3)));
  CHECK(f.residual <= 1e-12);
  CHECK(std::abs(fit_power_law(h, e05).slope - 0.5) <= 1e-12);

  std::vector<double> with_zero = e15;
  with_zero[3] = 0.0;
  const OrderFit g = fit_power_law(h, with_zero);
  CHECK(g.rows_excluded == 1);
  CHECK(g.rows_used == h.size() - 1);
  CHECK(std::abs(g.slope - 1.5) <= 1e-12);

  CHECK_THROWS_AS(fit_power_law(std::vector<double>{0.1, 0.2}, std::vector<double>{1, 2}), usage_error);
  CHECK_THROWS_AS(fit_power_law(std::vector<double>{0.1, 0.2, 0.4}, std::vector<double>{1, 0, -1}), usage_error);
}

TEST_CASE("terminal Brownian state") {
  const NoisePath p = sample_path(3, 0, QSpec::sine_basis({1.0, 0.5}), 50, 1.0);
  const auto beta = terminal_brownian(p);
  REQUIRE(beta.size() == 2);
  for (std::size_t j = 0; j < 2; ++j) {
    double s = 0.0;
    for (const auto& st : p.steps) s += st.dB[j];
    CHECK(std::abs(beta[j] - s) <= 1e-14);
  }
}

TEST_CASE("desk defaults") {
  const StudyConfig e1 = StudyConfig::desk_defaults("example1");
  CHECK(e1.modes == 64);
  CHECK(e1.noise_modes == 1);
  CHECK(e1.steps_list == std::vector<std::size_t>{8, 16, 32, 64, 128, 256, 512});
  CHECK(e1.realizations == 200);
  CHECK(e1.schemes.size() == 5);
  CHECK(e1.reference.mode == ReferenceSpec::Mode::exact);
  CHECK(e1.finest_steps() == 512);
  const StudyConfig e2 = StudyConfig::desk_defaults("example2");
  CHECK(e2.noise_modes == 64);
  CHECK(e2.reference.mode == ReferenceSpec::Mode::numerical);
  CHECK(e2.finest_steps() == 4096);
  CHECK_NOTHROW(e1.validate());
  CHECK_NOTHROW(e2.validate());
}

TEST_CASE("invalid study configurations") {
  StudyConfig cfg = small_study();
  cfg.noise_modes = 4;
  CHECK_THROWS_AS(cfg.validate(), usage_error);
  cfg = small_study();
  cfg.steps_list = {4, 12, 32};
  CHECK_THROWS_AS(cfg.validate(), usage_error);
  cfg = small_study("example2");
  cfg.reference = ReferenceSpec::exact();
  CHECK_THROWS_AS(cfg.validate(), usage_error);
  cfg = small_study();
  cfg.schemes.push_back(SchemeSpec::parse("lie"));
  CHECK_THROWS_AS(cfg.validate(), usage_error);
  cfg = small_study();
  cfg.realizations = 0;
  CHECK_THROWS_AS(run_study(cfg), usage_error);
}

TEST_CASE("single-row study") {
  StudyConfig cfg = small_study();
  cfg.realizations = 1;
  cfg.schemes = {SchemeSpec::parse("erkm15")};
  cfg.steps_list = {4};
  const ErrorTable t = run_study(cfg);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].scheme == "erkm15");
  CHECK(t.rows[0].steps == 4);
  CHECK(t.rows[0].h == 0.25);
  CHECK(t.rows[0].rms_error > 0.0);
  CHECK(t.realizations == 1);
}

TEST_CASE("study tables are reproducible across worker counts") {
  StudyConfig cfg = small_study("example3");
  const ErrorTable a = run_study(cfg);
  cfg.workers = 3;
  const ErrorTable b = run_study(cfg);
  std::ostringstream sa, sb;
  write_error_table(sa, a);
  write_error_table(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.rows.size() == 5 * 4);
  cfg.base_seed += 1;
  std::ostringstream sc;
  write_error_table(sc, run_study(cfg));
  CHECK(sc.str() != sa.str());
}

TEST_CASE("reference scheme against itself has zero error") {
  StudyConfig cfg = small_study("example2");
  cfg.schemes = {SchemeSpec::parse("ewp"), SchemeSpec::parse("erkm15")};
  cfg.steps_list = {16, 64};
  const ErrorTable t = run_study(cfg);
  CHECK(t.find("ewp", 64)->rms_error == 0.0);
  CHECK(t.find("ewp", 16)->rms_error > 0.0);
  CHECK(t.find("erkm15", 64)->rms_error < 1e-13);
}

TEST_CASE("progress is reported once per realization") {
  StudyConfig cfg = small_study();
  std::size_t calls = 0, last = 0;
  run_study(cfg, [&](std::size_t done, std::size_t total) {
    ++calls;
    last = done;
    CHECK(total == cfg.realizations);
  });
  CHECK(calls == cfg.realizations);
  CHECK(last == cfg.realizations);
}

TEST_CASE("coupled coarsening orders the errors of example 1") {
  // The M = 2^9 error must beat the M = 2^3 error in nearly every study.
  std::size_t wins = 0;
  const std::size_t studies = 5;
  for (std::size_t s = 0; s < studies; ++s) {
    StudyConfig cfg = StudyConfig::desk_defaults("example1");
    cfg.schemes = {SchemeSpec::parse("erkm15")};
    cfg.steps_list = {8, 512};
    cfg.base_seed = 1000 + s;
    const ErrorTable t = run_study(cfg);
    wins += t.find("erkm15", 512)->rms_error < t.find("erkm15", 8)->rms_error;
  }
  CHECK(wins == studies);
}

TEST_CASE("error table serialization") {
  ErrorTable t;
  t.realizations = 20;
  t.reference_flagged = 1;
  t.rows = {{"erkm15", 8, 0.125, 1.0 / 3.0, 1e-5, 0}, {"erkm15(2;1;1;1;1;1;1)", 16, 0.0625, 2.5e-7, 3e-9, 2}};
  std::stringstream ss;
  write_error_table(ss, t);
  const std::string text = ss.str();
  CHECK(text.find("scheme,M,h,rms_error,std_error,flagged\n") != std::string::npos);
  const ErrorTable back = read_error_table(ss);
  CHECK(back.realizations == 20);
  CHECK(back.reference_flagged == 1);
  REQUIRE(back.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.rows[i].scheme == t.rows[i].scheme);
    CHECK(back.rows[i].steps == t.rows[i].steps);
    CHECK(back.rows[i].h == t.rows[i].h);
    CHECK(back.rows[i].rms_error == t.rows[i].rms_error);
    CHECK(back.rows[i].std_error == t.rows[i].std_error);
    CHECK(back.rows[i].flagged == t.rows[i].flagged);
  }
  CHECK(back.flagged_fraction() == doctest::Approx(3.0 / 20.0));
  CHECK(back.failed());

  std::istringstream bad_header("a,b\n");
  CHECK_THROWS_AS(read_error_table(bad_header), usage_error);
  std::istringstream bad_row("scheme,M,h,rms_error,std_error,flagged\nlie,8,x,1,1,0\n");
  CHECK_THROWS_AS(read_error_table(bad_row), usage_error);
  std::istringstream dup("scheme,M,h,rms_error,std_error,flagged\nlie,8,1,1,1,0\nlie,8,1,1,1,0\n");
  CHECK_THROWS_AS(read_error_table(dup), usage_error);
}

TEST_CASE("flag threshold") {
  ErrorTable t;
  t.realizations = 200;
  t.rows = {{"lie", 8, 0.125, 1.0, 0.1, 2}};
  CHECK_FALSE(t.failed());
  t.rows[0].flagged = 3;
  CHECK(t.failed());
}

}  // TEST_SUITE
