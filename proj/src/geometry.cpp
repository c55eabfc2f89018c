#include "mmtc/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mmtc::geometry {

namespace {

void check_disk(double lambda, double radius) {
  if (!(lambda >= 0.0)) throw std::domain_error("density must be non-negative");
  if (!(radius > 0.0)) throw std::domain_error("radius must be positive");
}

double disk_mass(double lambda, double radius) { return lambda * std::numbers::pi * radius * radius; }

}  // namespace

double log_null_probability(double lambda, double radius) {
  check_disk(lambda, radius);
  return -disk_mass(lambda, radius);
}

double null_probability(double lambda, double radius) { return std::exp(log_null_probability(lambda, radius)); }

Annulus annulus(double radius, int users, int k, double lambda) {
  check_disk(lambda, radius);
  if (users < 1 || k < 1 || k > users) throw std::domain_error("annulus index outside [1, K]");
  return {(k - 1) * radius / users, k * radius / users, lambda / users};
}

double annulus_distance_pdf(double r, double radius, int users, int k) {
  const auto a = annulus(radius, users, k, 0.0);
  if (r < a.inner || r >= a.outer) return 0.0;
  return 2.0 * r / (a.outer * a.outer - a.inner * a.inner);
}

double nearest_distance_pdf(double r, double lambda, double radius) {
  check_disk(lambda, radius);
  if (r < 0.0 || r > radius || lambda == 0.0) return 0.0;
  const double a = disk_mass(lambda, radius);
  return 2.0 * std::numbers::pi * lambda * r * std::exp(-std::numbers::pi * lambda * r * r) / -std::expm1(-a);
}

double nearest_distance_cdf(double r, double lambda, double radius) {
  check_disk(lambda, radius);
  if (r <= 0.0) return 0.0;
  if (r >= radius) return 1.0;
  return std::expm1(-std::numbers::pi * lambda * r * r) / std::expm1(-disk_mass(lambda, radius));
}

std::vector<Point> sample_hppp_disk(double lambda, double radius, CounterRng& rng) {
  check_disk(lambda, radius);
  std::poisson_distribution<long> count(disk_mass(lambda, radius));
  const long n = lambda > 0.0 ? count(rng) : 0;
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double rr = radius * std::sqrt(rng.uniform());
    const double th = 2.0 * std::numbers::pi * rng.uniform();
    pts.push_back({rr * std::cos(th), rr * std::sin(th)});
  }
  return pts;
}

double sample_annulus_distance(double radius, int users, int k, CounterRng& rng) {
  const auto a = annulus(radius, users, k, 0.0);
  const double u = rng.uniform();
  return std::sqrt(a.inner * a.inner + u * (a.outer * a.outer - a.inner * a.inner));
}

double sample_nearest_distance(double lambda, double radius, CounterRng& rng) {
  check_disk(lambda, radius);
  if (lambda == 0.0) throw std::domain_error("nearest distance of an empty process");
  const double a = disk_mass(lambda, radius);
  const double u = rng.uniform();
  // Invert F(r) = (1 - e^{-a r^2 / R^2}) / (1 - e^{-a}).
  const double v = -std::log1p(u * std::expm1(-a)) / a;
  return radius * std::sqrt(std::min(v, 1.0));
}

}  // namespace mmtc::geometry
