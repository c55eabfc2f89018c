#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mmtc/geometry.hpp"

using namespace mmtc;
using namespace mmtc::geometry;
using boost::math::quadrature::gauss_kronrod;

namespace {
// Several binomial checks per case, so each gets a 4 sigma band.
bool within(long hits, long n, double p) {
  return std::abs(static_cast<double>(hits) / n - p) < 4.0 * std::sqrt(p * (1 - p) / n);
}
}  // namespace

TEST_CASE("null probability at the default densities") {
  CHECK(log_null_probability(1e-2, 100.0) == doctest::Approx(-100.0 * std::numbers::pi).epsilon(1e-15));
  // e^{-314.16} is representable but far below anything a sum would notice.
  CHECK(null_probability(1e-2, 100.0) == doctest::Approx(3.65e-137).epsilon(1e-2));
  CHECK(null_probability(0.0, 10.0) == 1.0);
  CHECK(null_probability(1e-3, 10.0) == doctest::Approx(std::exp(-0.1 * std::numbers::pi)));
  CHECK_THROWS_AS(null_probability(-1.0, 10.0), std::domain_error);
}

TEST_CASE("annulus distance density integrates to one") {
  for (int K : {1, 2, 3, 5})
    for (int k = 1; k <= K; ++k) {
      const auto a = annulus(100.0, K, k, 1e-2);
      const double mass =
          gauss_kronrod<double, 31>::integrate([&](double r) { return annulus_distance_pdf(r, 100.0, K, k); },
                                               a.inner, a.outer);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
  // With 2k - 1 = K the normalised density is 2 K r / r_t^2.
  CHECK(annulus_distance_pdf(50.0, 100.0, 3, 2) == doctest::Approx(2.0 * 3 * 50.0 / (100.0 * 100.0)));
  CHECK(annulus_distance_pdf(10.0, 100.0, 3, 2) == 0.0);
  CHECK(annulus(90.0, 3, 2, 3e-2).density == doctest::Approx(1e-2));
}

TEST_CASE("nearest distance law") {
  const double lam = 1e-3, R = 30.0;
  const double mass = gauss_kronrod<double, 31>::integrate(
      [&](double r) { return nearest_distance_pdf(r, lam, R); }, 0.0, 12.0);
  CHECK(mass == doctest::Approx(nearest_distance_cdf(12.0, lam, R)).epsilon(1e-12));
  CHECK(nearest_distance_cdf(R, lam, R) == 1.0);
  CHECK(nearest_distance_cdf(0.0, lam, R) == 0.0);
}

TEST_CASE("HPPP sampler matches the Poisson mean") {
  const double lam = 2e-3, R = 50.0;
  const double mean = lam * std::numbers::pi * R * R;
  const int n = 20000;
  double sum = 0.0, sum_r2 = 0.0;
  long pts = 0;
  for (int i = 0; i < n; ++i) {
    CounterRng rng(11, {static_cast<std::uint64_t>(i)});
    const auto p = sample_hppp_disk(lam, R, rng);
    sum += p.size();
    for (const auto& q : p) {
      CHECK(q.x * q.x + q.y * q.y <= R * R);
      sum_r2 += q.x * q.x + q.y * q.y;
      ++pts;
    }
  }
  CHECK(std::abs(sum / n - mean) < 3.0 * std::sqrt(mean / n));
  // Uniform in area: E[r^2] = R^2 / 2, Var[r^2] = R^4 / 12.
  CHECK(std::abs(sum_r2 / pts - R * R / 2) < 3.0 * R * R / std::sqrt(12.0 * pts));
}

TEST_CASE("distance samplers follow their CDFs") {
  const int n = 100000;
  const double lam = 1e-3, R = 30.0;
  for (double q : {5.0, 12.0, 20.0}) {
    long below = 0;
    CounterRng rng(5, {1, static_cast<std::uint64_t>(q)});
    for (int i = 0; i < n; ++i) below += sample_nearest_distance(lam, R, rng) < q;
    CHECK(within(below, n, nearest_distance_cdf(q, lam, R)));
  }
  // Annulus 2 of 3 over r = 90: F(r) = (r^2 - 30^2) / (60^2 - 30^2).
  long below = 0;
  CounterRng rng(5, {2});
  for (int i = 0; i < n; ++i) {
    const double d = sample_annulus_distance(90.0, 3, 2, rng);
    CHECK((d >= 30.0 && d < 60.0));
    below += d < 45.0;
  }
  CHECK(within(below, n, (45.0 * 45.0 - 900.0) / (3600.0 - 900.0)));
}
