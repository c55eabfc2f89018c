#include <cmath>
#include <random>

#include "doctest.h"
#include "mmtc/analytics.hpp"
#include "mmtc/channel.hpp"
#include "mmtc/experiments.hpp"
#include "mmtc/montecarlo.hpp"
#include "mmtc/power.hpp"

using namespace mmtc;

namespace {

std::mt19937_64 gen(20240601);

double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
int pick(int a, int b) { return std::uniform_int_distribution<int>(a, b)(gen); }
double log_uni(double a, double b) { return std::exp(uni(std::log(a), std::log(b))); }

const char* const kSchemes[] = {"TCoM", "TQoM", "PCoM", "PQoM", "CoM", "QoM", "CNRR"};
const char* const kPresets[] = {"T1", "T2", "T3", "T4", "T5"};

channel::FitCache& fits() {
  static channel::FitCache cache;
  return cache;
}

experiments::Settings random_settings() {
  experiments::Settings st;
  st.topology_name = kPresets[pick(0, 4)];
  st.topology = preset_topology(st.topology_name);
  st.budget.p0_dbm = uni(-30.0, 60.0);
  st.rho = uni(0.0, 1.0);
  st.alpha = uni(0.05, 0.95);
  st.beta = uni(0.0, 0.95);
  st.eta = uni(0.3, 1.0);
  st.p_message = uni(0.55, 0.95);
  st.lambda_active = pick(0, 1) ? 1e-2 : 1e-3;
  return st;
}

Scenario random_scenario(bool qom_allowed = true) {
  std::string scheme;
  do scheme = kSchemes[pick(0, 6)];
  while (!qom_allowed && scheme.find("QoM") != std::string::npos);
  return experiments::make_scenario(scheme, random_settings(), fits());
}

void check_tails(const specfun::Tails& a, const specfun::Tails& b) {
  CHECK(a.lower >= 0.0);
  CHECK(a.lower <= 1.0);
  CHECK(a.lower + a.upper == doctest::Approx(1.0).epsilon(1e-9));
  // b is evaluated at a larger argument.
  CHECK(b.lower >= a.lower - 1e-12);
}

}  // namespace

TEST_CASE("random CDF evaluations are valid and monotone") {
  LinkBudget lb;
  for (int i = 0; i < 1000; ++i) {
    const double x = log_uni(1e-8, 1e4);
    const double y = x * uni(1.01, 3.0);
    CAPTURE(i);
    CAPTURE(x);
    switch (i % 5) {
      case 0: {
        const int n = pick(1, 4);
        check_tails(specfun::prod_exp_tails(x, n), specfun::prod_exp_tails(y, n));
        break;
      }
      case 1: {
        const int K = pick(1, 3), k = pick(1, K), n = pick(1, 3);
        check_tails(specfun::annulus_chain_tails(x, n, 3.67, K, k), specfun::annulus_chain_tails(y, n, 3.67, K, k));
        break;
      }
      case 2: {
        const int n = pick(0, 3);
        const double mu = log_uni(0.05, 5.0), th = uni(0.5, 2.0), m = uni(0.3, 1.5);
        check_tails(specfun::singh_maddala_chain_tails(x, n, mu, th, m),
                    specfun::singh_maddala_chain_tails(y, n, mu, th, m));
        break;
      }
      case 3: {
        const int K = pick(1, 3), k = pick(1, K);
        const double r = uni(20.0, 120.0), l = channel::path_loss(r, lb);
        check_tails(channel::annulus_gain_tails(x * l, r, K, k, lb), channel::annulus_gain_tails(y * l, r, K, k, lb));
        break;
      }
      default: {
        const double r = uni(20.0, 120.0), lam = log_uni(1e-4, 1e-2), l = channel::path_loss(r, lb);
        check_tails(channel::nearest_gain_tails(x * l, lam, r, lb), channel::nearest_gain_tails(y * l, lam, r, lb));
      }
    }
  }
}

TEST_CASE("harvesting and occupancy states partition the sample space") {
  for (int i = 0; i < 300; ++i) {
    const auto s = random_scenario(false);
    for (int t = 1; t <= s.hops(); ++t) {
      double total = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) total += power::rho(s.policy, t + 1, a) * power::iota(s, t, b);
      CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
      double w = 0.0;
      for (const auto& br : power::chain_branches(s, t)) w += br.weight;
      CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("outage rises continuously to one at the reachable rate") {
  // Past R* = log2(1 / (1 - p_M)) / (M - 1) no superposed slot decodes s_M.
  for (int i = 0; i < 200; ++i) {
    auto st = random_settings();
    st.budget.p0_dbm = uni(-30.0, 20.0);
    const std::string scheme = kSchemes[pick(0, 5)];
    if (scheme.find("QoM") != std::string::npos) continue;
    auto s = experiments::make_scenario(scheme, st, fits());
    const double rstar = std::log2(1.0 / (1.0 - s.plan.p_message)) / s.hops();
    CAPTURE(scheme);
    s.plan.rate_message = rstar * (1.0 + 1e-12);
    const double limit = analytics::op_type1(s, 1);
    CHECK(limit >= 1.0 - power::iota(s, 1, 0) - 1e-15);
    double prev_gap = 1.0;
    for (double d = 1e-2; d > 1e-15; d *= 1e-2) {
      s.plan.rate_message = rstar * (1.0 - d);
      const double gap = limit - analytics::op_type1(s, 1);
      CHECK(gap >= -1e-12);
      CHECK(gap <= prev_gap + 1e-12);
      prev_gap = gap;
    }
    CHECK(prev_gap < 1e-6);
  }
}

TEST_CASE("outage falls as transmit power grows") {
  for (int i = 0; i < 100; ++i) {
    auto st = random_settings();
    const std::string scheme = kSchemes[pick(0, 6)];
    CAPTURE(scheme);
    const double lo = analytics::evaluate(experiments::make_scenario(scheme, st, fits())).e2e_type1;
    st.budget.p0_dbm += 10.0;
    const double hi = analytics::evaluate(experiments::make_scenario(scheme, st, fits())).e2e_type1;
    CHECK(hi <= lo + 1e-12);
  }
}

TEST_CASE("power recursion over random realizations") {
  for (int i = 0; i < 10000; ++i) {
    const int M = pick(3, 6);
    const auto arch = pick(0, 1) ? Architecture::bteh : Architecture::bpeh;
    const auto pol = EhPolicy::uniform(M, arch, uni(0, 1), uni(0.05, 0.95), uni(0, 0.95), uni(0.3, 1.0));
    std::vector<int> eh(M, 0);
    std::vector<double> g(M - 1);
    for (int q = 2; q < M; ++q) eh[q - 1] = pick(0, 1);
    for (auto& x : g) x = log_uni(1e-9, 1e-3);
    const double p0 = log_uni(1e-6, 1.0);
    const auto P = power::transmit_powers(eh, g, pol, p0);
    for (int t = 1; t < M; ++t) {
      CHECK(P[t - 1] > 0.0);
      CHECK(P[t - 1] <= p0 * (1 + 1e-15));
      CHECK(power::transmit_power_closed(t, eh, g, pol, p0) == doctest::Approx(P[t - 1]).epsilon(1e-12));
    }
  }
}

TEST_CASE("trial replay does not depend on the worker count") {
  for (int i = 0; i < 8; ++i) {
    const auto s = random_scenario();
    const std::uint64_t seed = gen();
    const auto a = montecarlo::run_trials(s, 1500, seed, 1);
    const auto b = montecarlo::run_trials(s, 1500, seed, 3);
    CAPTURE(s.scheme);
    CHECK(a.e2e_fail == b.e2e_fail);
    CHECK(a.hop_fail == b.hop_fail);
    CHECK(a.device_fail == b.device_fail);
    CHECK(a.device_e2e_fail == b.device_e2e_fail);
    CHECK(a.fixed_transmissions == b.fixed_transmissions);
  }
}
