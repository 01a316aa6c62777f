#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qbline/errors.hpp"
#include "qbline/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace qbline;

namespace {

ChainConfig uniform(int n) { return {n, 1.0, 1.0, UniformCoupling{}}; }
ChainConfig parabolic(int n) { return {n, 1.0, 1.0, ParabolicCoupling{}}; }

// Power of the n=3 single-photon battery straight from sin^4(sqrt2 Jt / 2).
double n3_power(double t) { return std::pow(std::sin(std::sqrt(2.0) * t / 2.0), 4) / t; }

// First local maximum of the W-line power sampled with the expm propagator.
double w_first_peak_oracle(int n) {
  const ChainConfig c = uniform(n);
  auto power = [&](double t) {
    const auto u = numeric_propagator(c, t, NumericMethod::Expm);
    return energy(battery_state_wstate(u, WLine{}, WMode::PaperLiteral, 1.0)) / t;
  };
  const double h = 1e-3;
  double prev = power(0.2), cur = power(0.2 + h);
  for (double t = 0.2 + h;; t += h) {
    const double next = power(t + h);
    if (cur >= prev && cur > next) return t;
    prev = cur;
    cur = next;
  }
}

}  // namespace

TEST_CASE("time series: n=3 reaches full charge at Jt = pi/sqrt2") {
  const TimeSeries ts = time_series(uniform(3), SinglePhoton{}, {10.0, 0.01}, WMode::Exact);
  REQUIRE(ts.jt.size() == 1000);
  const auto it = std::max_element(ts.e.begin(), ts.e.end());
  CHECK(*it == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(ts.jt[it - ts.e.begin()] - std::numbers::pi / std::sqrt(2.0)) <= 0.01);
  CHECK(ts.jt.front() == 0.01);
  CHECK(std::isfinite(ts.p.front()));
  CHECK(ts.e.front() >= 0.0);
  for (std::size_t i = 0; i < ts.jt.size(); ++i) {
    CHECK(ts.erg[i] <= ts.e[i] + 1e-12);
    CHECK(ts.p[i] == ts.e[i] / ts.jt[i]);
  }
}

TEST_CASE("time series: ergotropy collapses as the line grows") {
  const TimeGrid grid{40.0, 0.01};
  const TimeSeries n30 = time_series(uniform(30), SinglePhoton{}, grid, WMode::Exact);
  const double e30 = *std::max_element(n30.e.begin(), n30.e.end());
  CHECK(e30 > 0.5);
  CHECK(e30 < 0.55);
  CHECK(*std::max_element(n30.erg.begin(), n30.erg.end()) < 0.1);

  const TimeSeries n35 = time_series(uniform(35), SinglePhoton{}, grid, WMode::Exact);
  CHECK(*std::max_element(n35.e.begin(), n35.e.end()) < 0.5);
  CHECK(*std::max_element(n35.erg.begin(), n35.erg.end()) == 0.0);
}

TEST_CASE("time series: grid validation") {
  CHECK_THROWS_AS(time_series(uniform(3), SinglePhoton{}, {0.0, 0.01}, WMode::Exact), ConfigError);
  CHECK_THROWS_AS(time_series(uniform(3), SinglePhoton{}, {1.0, 2.0}, WMode::Exact), ConfigError);
  CHECK_THROWS_AS(time_series(uniform(3), SinglePhoton{}, {1.0, -0.1}, WMode::Exact), ConfigError);
}

TEST_CASE("max power time: n=3 matches a dense closed-form search") {
  double best_t = 0.0, best_p = 0.0;
  for (double t = 1e-3; t < std::numbers::pi / std::sqrt(2.0); t += 1e-6) {
    const double p = n3_power(t);
    if (p > best_p) {
      best_p = p;
      best_t = t;
    }
  }
  const MaxPowerResult r =
      max_power_time(uniform(3), SinglePhoton{}, TauRule::GlobalMax, 20.0, WMode::Exact);
  CHECK(r.tau_bar > 0.0);
  CHECK(r.tau_bar < std::numbers::pi / std::sqrt(2.0));
  CHECK(std::abs(r.tau_bar - best_t) < 2e-6);
  CHECK(r.power == doctest::Approx(best_p).epsilon(1e-10));
  CHECK(r.at_tau.e == doctest::Approx(n3_power(r.tau_bar) * r.tau_bar).epsilon(1e-12));
}

TEST_CASE("max power time: W line first peak matches an independent sampled search") {
  for (int n : {6, 8}) {
    const MaxPowerResult r =
        max_power_time(uniform(n), WLine{}, TauRule::FirstLocalMax, default_window(n),
                       WMode::PaperLiteral);
    CHECK(std::abs(r.tau_bar - w_first_peak_oracle(n)) < 2e-3);
    CHECK(r.tau_bar > 0.5);
    CHECK(r.tau_bar < 1.2);
  }
}

TEST_CASE("max power time: window below the first peak is an error") {
  CHECK_THROWS_AS(max_power_time(uniform(3), SinglePhoton{}, TauRule::GlobalMax, 0.5, WMode::Exact),
                  WindowTooSmallError);
  CHECK_THROWS_AS(max_power_time(uniform(3), SinglePhoton{}, TauRule::GlobalMax, -1.0, WMode::Exact),
                  ConfigError);
}

TEST_CASE("max power time: refinement never loses against the coarse grid") {
  const ProtocolOptions opts;
  for (int n : {3, 7, 15, 26}) {
    for (TauRule rule : {TauRule::GlobalMax, TauRule::FirstLocalMax}) {
      const Scenario sc(uniform(n), Superposition{0.3, 0.0}, WMode::Exact);
      const double window = default_window(n);
      const MaxPowerResult r = max_power_time(sc, rule, window, opts);
      double best_interior = 0.0;
      const double h = coarse_step_for(sc.config(), opts);
      const int count = static_cast<int>(std::floor(window / h + 1e-9));
      double prev = sc.power(h), cur = sc.power(2 * h);
      for (int k = 2; k < count; ++k) {
        const double next = sc.power((k + 1) * h);
        if (cur >= prev && cur > next) {
          best_interior = std::max(best_interior, cur);
          if (rule == TauRule::FirstLocalMax) break;
        }
        prev = cur;
        cur = next;
      }
      CHECK(r.power >= best_interior - 1e-12);
    }
  }
}

TEST_CASE("max power time: first-local-max ignores round-off maxima at small Jt") {
  // The battery amplitude is O(t^(n-1)); its round-off noise must not be
  // mistaken for the first peak.
  const MaxPowerResult r =
      max_power_time(uniform(20), SinglePhoton{}, TauRule::FirstLocalMax, 80.0, WMode::Exact);
  CHECK(r.tau_bar > 5.0);
  CHECK(r.at_tau.e > 0.1);
}

TEST_CASE("summaries are deterministic and windows stable for first_local_max") {
  const ScanSummary a = summarize(uniform(8), WLine{}, TauRule::FirstLocalMax, WMode::PaperLiteral);
  const ScanSummary b = summarize(uniform(8), WLine{}, TauRule::FirstLocalMax, WMode::PaperLiteral);
  CHECK(a.tau_bar == b.tau_bar);
  CHECK(a.erg_at_tau == b.erg_at_tau);
  CHECK(a.e_at_tau == b.e_at_tau);
  CHECK(a.window_stable);
  CHECK(a.tau_bar > 0.0);
  CHECK(a.ratio >= 0.0);
  CHECK(a.ratio <= 1.0);
}

TEST_CASE("scan: single photon ergotropy positive at n=3 and zero at n=50") {
  const auto scan = scan_n(uniform(3), SinglePhoton{}, 3, 3, TauRule::GlobalMax, WMode::Exact);
  CHECK(scan.front().erg_at_tau > 0.0);
  REQUIRE(scan.front().tau_erg.has_value());
  const auto far = scan_n(uniform(50), SinglePhoton{}, 50, 50, TauRule::GlobalMax, WMode::Exact);
  CHECK(far.front().erg_at_tau == 0.0);
  CHECK(far.front().ratio == 0.0);
  CHECK_FALSE(far.front().tau_erg.has_value());
}

TEST_CASE("scan: superposition beta=0.5 keeps ergotropy at every n") {
  const auto scan =
      scan_n(uniform(3), Superposition{0.5, 0.0}, 3, 60, TauRule::GlobalMax, WMode::Exact);
  REQUIRE(scan.size() == 58);
  for (const auto& s : scan) {
    CHECK(s.erg_at_tau > 1e-12);
    CHECK(s.erg_at_tau <= s.e_at_tau);
    CHECK(s.e_at_tau <= 1.0);
  }
}

TEST_CASE("scan: parabolic ratio grows toward one") {
  const auto scan = scan_n(parabolic(3), SinglePhoton{}, 3, 30, TauRule::GlobalMax, WMode::Exact);
  const auto ratio = [&](int n) { return scan[n - 3].ratio; };
  CHECK(ratio(30) > ratio(10));
  CHECK(ratio(10) > ratio(3));
  CHECK(ratio(30) > 0.99);
  CHECK(ratio(30) < 1.0);
}

TEST_CASE("scan: range validation") {
  CHECK_THROWS_AS(scan_n(uniform(3), SinglePhoton{}, 1, 5, TauRule::GlobalMax, WMode::Exact),
                  ConfigError);
  CHECK_THROWS_AS(scan_n(uniform(3), SinglePhoton{}, 5, 201, TauRule::GlobalMax, WMode::Exact),
                  ConfigError);
}

TEST_CASE("critical n: none when ergotropy persists") {
  const CriticalN tiny = critical_n(uniform(3), SinglePhoton{}, TauRule::GlobalMax, 3, WMode::Exact);
  CHECK_FALSE(tiny.n_c.has_value());
  const CriticalN sup =
      critical_n(uniform(3), Superposition{0.05, 0.0}, TauRule::GlobalMax, 60, WMode::Exact);
  CHECK_FALSE(sup.n_c.has_value());
  CHECK_THROWS_AS(critical_n(uniform(3), SinglePhoton{}, TauRule::GlobalMax, 2, WMode::Exact),
                  ConfigError);
}

TEST_CASE("beta sweep: n=50 has an interior maximum and beta=0 reproduces the single photon") {
  std::vector<double> grid;
  for (int k = 0; k <= 30; ++k) grid.push_back(0.05 * k);
  const auto rows = beta_sweep(uniform(50), grid, 0.0, TauRule::GlobalMax);
  CHECK(rows.front().erg_at_tau == 0.0);
  const auto best = std::max_element(rows.begin(), rows.end(), [](const BetaRow& a, const BetaRow& b) {
    return a.erg_at_tau < b.erg_at_tau;
  });
  CHECK(best != rows.begin());
  CHECK(best != rows.end() - 1);
  CHECK(best->erg_at_tau > 0.0);

  const auto single = scan_n(uniform(50), SinglePhoton{}, 50, 50, TauRule::GlobalMax, WMode::Exact);
  CHECK(rows.front().tau_bar == doctest::Approx(single.front().tau_bar).epsilon(1e-12));
  CHECK(rows.front().e_at_tau == doctest::Approx(single.front().e_at_tau).epsilon(1e-12));
  CHECK(rows.front().erg_at_tau == single.front().erg_at_tau);

  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].ratio >= rows[i - 1].ratio - 1e-12);
  CHECK_THROWS_AS(beta_sweep(uniform(5), {0.1, -0.2}, 0.0, TauRule::GlobalMax), ConfigError);
}

TEST_CASE("coherence benefit at fixed tau_bar: ratio non-decreasing in beta") {
  for (int n : {5, 20, 45}) {
    const MaxPowerResult mp = max_power_time(uniform(n), SinglePhoton{}, TauRule::GlobalMax,
                                             default_window(n), WMode::Exact);
    double prev = -1.0;
    for (int k = 0; k <= 20; ++k) {
      const Scenario sc(uniform(n), Superposition{0.05 * k, 0.0}, WMode::Exact);
      const Sample s = sc.sample(mp.tau_bar);
      const double ratio = s.erg / s.e;
      CHECK(ratio >= prev - 1e-12);
      prev = ratio;
    }
  }
}

TEST_CASE("rule parsing") {
  CHECK(parse_tau_rule("global_max") == TauRule::GlobalMax);
  CHECK(parse_tau_rule("first_local_max") == TauRule::FirstLocalMax);
  CHECK(to_string(TauRule::FirstLocalMax) == "first_local_max");
  CHECK_THROWS_AS(parse_tau_rule("median"), ConfigError);
}

TEST_CASE("coarse step shrinks for parabolic chains") {
  const ProtocolOptions opts;
  CHECK(coarse_step_for(uniform(40), opts) == 1e-2);
  CHECK(coarse_step_for(parabolic(5), opts) == 1e-2);
  CHECK(coarse_step_for(parabolic(40), opts) == doctest::Approx(2.5e-3));
}
