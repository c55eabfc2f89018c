#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mmtc/analytics.hpp"
#include "mmtc/channel.hpp"
#include "mmtc/experiments.hpp"
#include "mmtc/montecarlo.hpp"
#include "mmtc/power.hpp"

using namespace mmtc;
using namespace mmtc::montecarlo;

namespace {
Scenario make(const std::string& scheme, experiments::Settings st = {}) {
  channel::FitCache cache;
  return experiments::make_scenario(scheme, st, cache);
}

// Several binomial checks per case, so each gets a 4 sigma band.
void check_ccdf(const Estimate& e, double p) {
  const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / e.trials);
  CHECK(std::abs(e.mean - p) < 4.0 * sigma);
}

bool same(const Tally& a, const Tally& b) {
  return a.trials == b.trials && a.e2e_fail == b.e2e_fail && a.fixed_transmissions == b.fixed_transmissions &&
         a.hop_fail == b.hop_fail && a.present == b.present && a.device_fail == b.device_fail &&
         a.device_e2e_fail == b.device_e2e_fail;
}
}  // namespace

TEST_CASE("results do not depend on the thread count or the split") {
  const auto s = make("TCoM");
  const auto one = run_trials(s, 3000, 42, 1);
  CHECK(same(one, run_trials(s, 3000, 42, 3)));
  auto parts = run_trials(s, 1200, 42, 1, 0);
  parts.merge(run_trials(s, 1800, 42, 2, 1200));
  CHECK(same(one, parts));
  CHECK_FALSE(same(one, run_trials(s, 3000, 43, 1)));
  const auto a = run_block_trial(s, 9, 17), b = run_block_trial(s, 9, 17);
  CHECK(a.snr == b.snr);
  CHECK(a.device_snr == b.device_snr);
}

TEST_CASE("invalid trial counts are rejected") {
  const auto s = make("TCoM");
  CHECK_THROWS_AS(binomial(0, 0), std::invalid_argument);
  CHECK_THROWS_AS(simulate(s, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(empirical_ccdf_oracle(s, Variable::x, 1, 0, {1.0}, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(empirical_ccdf_oracle(s, Variable::z, 1, 1, {1.0}, 10, 1), std::invalid_argument);
}

TEST_CASE("interval width shrinks as one over root N") {
  const auto a = binomial(100, 1000), b = binomial(400, 4000);
  CHECK(a.mean == b.mean);
  CHECK(a.half_width / b.half_width == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(a.half_width == doctest::Approx(1.959963984540054 * std::sqrt(0.09 / 1000)).epsilon(1e-6));
}

TEST_CASE("no superposition when the message takes all the power") {
  const auto s = make("CNRR");
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto o = run_block_trial(s, 5, i);
    for (char n : o.noma) CHECK(n == 0);
  }
  const auto r = simulate(s, 2000, 5);
  CHECK(r.device.size() == static_cast<std::size_t>(s.hops()));
  for (const auto& d : r.device) CHECK(d.empty());
}

TEST_CASE("superposition follows the disk occupancy") {
  experiments::Settings st;
  st.lambda_active = 1e-5;
  const auto s = make("TCoM", st);
  const long n = 40000;
  long noma = 0;
  for (long i = 0; i < n; ++i) noma += run_block_trial(s, 77, static_cast<std::uint64_t>(i)).noma[0];
  const double p = power::iota(s, 1, 1);
  CHECK(p == doctest::Approx(-std::expm1(-1e-5 * M_PI * 1e4)));
  CHECK(std::abs(static_cast<double>(noma) / n - p) < 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("harvested power follows the previous hop") {
  const auto s = make("TCoM");
  const double sigma2 = s.budget.noise_watt();
  const double p0 = s.budget.p0_watt();
  for (std::uint64_t i = 0; i < 3000; ++i) {
    const auto o = run_block_trial(s, 8, i);
    int fixed = 0;
    CHECK(o.power[0] == p0);
    for (int t = 1; t <= s.hops(); ++t) {
      if (!o.eh[t - 1]) ++fixed;
      if (t == 1) continue;
      if (o.eh[t - 1])
        CHECK(o.power[t - 1] == doctest::Approx(power::omega(s.policy, t) * o.snr[t - 2] * sigma2).epsilon(1e-12));
      else
        CHECK(o.power[t - 1] == p0);
    }
    CHECK(o.fixed_transmissions == fixed);
  }
}

TEST_CASE("outage events are nested") {
  const auto s = make("TCoM");
  const auto tally = run_trials(s, 20000, 3, 1);
  long worst_hop = 0;
  for (long f : tally.hop_fail) worst_hop = std::max(worst_hop, f);
  CHECK(tally.e2e_fail >= worst_hop);
  for (int t = 0; t < s.hops(); ++t)
    for (std::size_t k = 0; k < tally.present[t].size(); ++k) {
      CHECK(tally.device_e2e_fail[t][k] >= tally.device_fail[t][k]);
      CHECK(tally.present[t][k] <= tally.trials);
    }
  for (std::uint64_t i = 0; i < 2000; ++i) {
    const auto o = run_block_trial(s, 3, i);
    for (int t = 0; t < s.hops(); ++t)
      for (std::size_t k = 0; k < o.device_ok[t].size(); ++k)
        if (o.device_ok[t][k]) CHECK(o.device_present[t][k]);
  }
}

TEST_CASE("empirical CCDF of the relay SNR matches the harvesting mixture") {
  const auto s = make("TCoM");
  const long n = 200000;
  for (int t : {1, 3}) {
    const double scale = s.budget.snr0() * channel::path_loss(200.0, s.budget);
    const std::vector<double> grid{1e-3 * scale, 0.1 * scale, scale, 3.0 * scale};
    const auto e = empirical_ccdf_oracle(s, Variable::x, t, 0, grid, n, 100 + t);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CAPTURE(t);
      CAPTURE(i);
      check_ccdf(e[i], analytics::tails_x(s, t, grid[i]).upper);
    }
  }
}

TEST_CASE("empirical CCDF of the annulus device SNR") {
  const auto s = make("TCoM");
  const long n = 200000;
  const double scale = s.budget.snr0() * channel::path_loss(100.0, s.budget);
  const std::vector<double> grid{1e-2 * scale, 0.3 * scale, 3.0 * scale, 30.0 * scale};
  for (auto [t, k] : {std::pair{1, 1}, std::pair{2, 2}, std::pair{3, 1}}) {
    const auto e = empirical_ccdf_oracle(s, Variable::y, t, k, grid, n, 200 + t);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CAPTURE(t);
      CAPTURE(i);
      check_ccdf(e[i], analytics::tails_y(s, t, k, grid[i]).upper);
    }
  }
}

TEST_CASE("empirical CCDF of the nearest device SNR matches the exact law") {
  const auto s = make("TQoM");
  const long n = 200000;
  const double g0 = s.budget.snr0();
  const double scale = g0 * channel::path_loss(100.0, s.budget);
  const std::vector<double> grid{1e-2 * scale, 0.3 * scale, 3.0 * scale, 300.0 * scale};
  const auto e = empirical_ccdf_oracle(s, Variable::z, 1, 1, grid, n, 300);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CAPTURE(i);
    check_ccdf(e[i], channel::nearest_gain_tails(grid[i] / g0, 1e-2, 100.0, s.budget).upper);
  }
}

TEST_CASE("trial dump has one row per trial") {
  const auto s = make("TQoM");
  std::ostringstream os;
  dump_trials(os, s, 5, 1);
  std::istringstream is(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 6);
  CHECK(os.str().rfind("trial,eh1,power1,noma1,snr1,hop_ok1", 0) == 0);
}
