#include "mmtc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gsl/gsl_multimin.h>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include "json.hpp"

#include "mmtc/errors.hpp"

namespace mmtc::channel {

double intercept(const LinkBudget& b) {
  return std::pow(10.0, (22.7 + 26.0 * std::log10(b.carrier_ghz) - b.gain_tx_dbi - b.gain_rx_dbi) / 10.0);
}

double path_loss(double x, const LinkBudget& b) {
  if (!(x > 0.0)) throw std::domain_error("path_loss: distance must be positive");
  return intercept(b) * std::pow(b.reference_m / x, b.exponent);
}

double path_loss_db(double x, const LinkBudget& b) {
  if (!(x > 0.0)) throw std::domain_error("path_loss_db: distance must be positive");
  return -b.gain_rx_dbi - b.gain_tx_dbi + 22.7 + 26.0 * std::log10(b.carrier_ghz) -
         10.0 * b.exponent * std::log10(x / b.reference_m);
}

double chi(int k, int i) {
  if (k < 1 || (i != 0 && i != 1)) throw std::domain_error("chi: k >= 1 and i in {0, 1}");
  return static_cast<double>((k - i) * (k - i)) / (k * k - (k - 1) * (k - 1));
}

specfun::Tails hop_gain_tails(double phi, double distance, const LinkBudget& b) {
  if (!(phi > 0.0)) return {0.0, 1.0};
  const double x = phi / path_loss(distance, b);
  return {-std::expm1(-x), std::exp(-x)};
}

specfun::Tails annulus_gain_tails(double phi, double radius, int users, int k, const LinkBudget& b) {
  if (users < 1 || k < 1 || k > users) throw std::domain_error("annulus index outside [1, K]");
  if (!(phi > 0.0)) return {0.0, 1.0};
  const double eps = b.exponent;
  const double s = 2.0 / eps;
  const double a = phi / path_loss(radius, b);
  const double uo = static_cast<double>(k) / users;
  const double ui = static_cast<double>(k - 1) / users;
  const double Ao = a * std::pow(uo, eps);
  const double Ai = a * std::pow(ui, eps);
  const double area = uo * uo - ui * ui;

  // γ(s, Ao) - γ(s, Ai), switching to upper functions when both are near Γ(s).
  const double diff = Ai > 1.0 ? specfun::upper_incomplete_gamma(s, Ai) - specfun::upper_incomplete_gamma(s, Ao)
                               : specfun::lower_incomplete_gamma(s, Ao) - specfun::lower_incomplete_gamma(s, Ai);
  const double upper = s * std::exp(-s * std::log(a)) * diff / area;
  if (upper < 0.5) return {1.0 - upper, upper};
  const double lower =
      (uo * uo * specfun::scaled_gamma_complement(s, Ao) - ui * ui * specfun::scaled_gamma_complement(s, Ai)) / area;
  return {lower, 1.0 - lower};
}

namespace {

double disk_mass(double lambda, double radius) { return lambda * std::numbers::pi * radius * radius; }

// Tails of φ / ℓ(r_t) at x. With w = a (d / r_t)^2,
//   CCDF = ∫_0^a e^{-w} exp(-x (w/a)^{ε/2}) dw / (1 - e^{-a}).
specfun::Tails nearest_tails_normalised(double x, double a, double eps) {
  if (!(x > 0.0)) return {0.0, 1.0};
  const double c = x * std::pow(a, -eps / 2.0);
  const double h = eps / 2.0;
  const double norm = -std::expm1(-a);
  // Beyond W both integrands are below e^{-745} of their peak.
  double W = a;
  if (c > 0.0) W = std::min(a, std::pow(745.0 / c, 1.0 / h));
  W = std::min(W, 745.0);
  W = std::min(W, a);

  // w = v^2 smooths the w^{ε/2} kink at the origin.
  auto integrate = [&](auto&& f, double lo, double hi) {
    double err = 0.0;
    auto g = [&](double v) { return 2.0 * v * f(v * v); };
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, std::sqrt(lo), std::sqrt(hi),
                                                                                   15, 1e-10, &err);
    if (err > 1e-8 * std::abs(v) && err > 1e-15)
      throw NumericError("nearest_gain_tails: quadrature tolerance not met", err);
    return v;
  };
  // Geometric breakpoints resolve the scale c^{-1/h} when it is tiny.
  std::vector<double> cuts{0.0};
  const double inner = c > 0.0 ? std::pow(1.0 / c, 1.0 / h) : W;
  for (double f : {1e-3, 1e-2, 1e-1, 1.0, 10.0})
    if (f * inner < W && f * inner > cuts.back()) cuts.push_back(f * inner);
  for (double f : {1.0, 5.0, 25.0})
    if (f < W && f > cuts.back()) cuts.push_back(f);
  cuts.push_back(W);

  auto upper_f = [&](double w) { return std::exp(-w - c * std::pow(w, h)); };
  auto lower_f = [&](double w) { return -std::exp(-w) * std::expm1(-c * std::pow(w, h)); };
  double upper = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) upper += integrate(upper_f, cuts[i], cuts[i + 1]);
  upper /= norm;
  if (upper < 0.5) return {1.0 - upper, upper};
  double lower = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) lower += integrate(lower_f, cuts[i], cuts[i + 1]);
  // Mass beyond W contributes e^{-w} fully to the lower tail.
  if (W < a) lower += std::exp(-W) - std::exp(-a);
  lower /= norm;
  return {lower, 1.0 - lower};
}

}  // namespace

specfun::Tails nearest_gain_tails(double phi, double lambda, double radius, const LinkBudget& b) {
  if (!(lambda > 0.0) || !(radius > 0.0)) throw std::domain_error("nearest_gain_tails: needs lambda, radius > 0");
  return nearest_tails_normalised(phi / path_loss(radius, b), disk_mass(lambda, radius), b.exponent);
}

double annulus_slope(int users, int k, double exponent) {
  if (users < 1 || k < 1 || k > users) throw std::domain_error("annulus index outside [1, K]");
  const double s = 2.0 / exponent;
  const double uo = static_cast<double>(k) / users;
  const double ui = static_cast<double>(k - 1) / users;
  return s / (s + 1.0) * (chi(k, 0) * std::pow(uo, exponent) - chi(k, 1) * std::pow(ui, exponent));
}

double nearest_slope(double lambda, double radius, double exponent) {
  const double a = disk_mass(lambda, radius);
  return std::pow(a, -exponent / 2.0) * specfun::lower_incomplete_gamma(exponent / 2.0 + 1.0, a) / -std::expm1(-a);
}

namespace {

struct FitProblem {
  std::vector<double> x;  // normalised grid (units of ℓ(r_t) · scale)
  std::vector<double> F;  // numerical CDF
};

double fit_scale(double a, double eps) { return std::pow(std::max(a, 1.0), eps / 2.0); }

FitProblem make_problem(double a, double eps, const FitOptions& o) {
  const double S = fit_scale(a, eps);
  // Grid in units of ℓ(r_t): covers [1e-4, 1e4] and the same span around S.
  const double lo = std::pow(10.0, -o.decades_below) * std::min(1.0, S);
  const double hi = std::pow(10.0, o.decades_above) * std::max(1.0, S);
  const int n = static_cast<int>(std::ceil(std::log10(hi / lo) * o.points_per_decade)) + 1;
  FitProblem p;
  for (int i = 0; i < n; ++i) {
    const double xi = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    p.x.push_back(xi / S);
    p.F.push_back(nearest_tails_normalised(xi, a, eps).lower);
  }
  return p;
}

double sup_error(const FitProblem& p, double mu, double theta, double m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    const double F = -std::expm1(-m * std::log1p(std::pow(p.x[i] / mu, theta)));
    worst = std::max(worst, std::abs(F - p.F[i]));
  }
  return worst;
}

double objective(const gsl_vector* v, void* params) {
  const auto* p = static_cast<const FitProblem*>(params);
  const double mu = std::exp(gsl_vector_get(v, 0));
  const double theta = std::exp(gsl_vector_get(v, 1));
  const double m = std::exp(gsl_vector_get(v, 2));
  if (!std::isfinite(mu) || !std::isfinite(theta) || !std::isfinite(m) || theta > 50.0 || m > 50.0) return 10.0;
  return sup_error(*p, mu, theta, m);
}

struct Candidate {
  double f;
  double v[3];
};

Candidate nelder_mead(const FitProblem& p, const double start[3], double step) {
  const gsl_multimin_fminimizer_type* T = gsl_multimin_fminimizer_nmsimplex2;
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(T, 3);
  gsl_vector* x = gsl_vector_alloc(3);
  gsl_vector* ss = gsl_vector_alloc(3);
  for (int i = 0; i < 3; ++i) gsl_vector_set(x, i, start[i]);
  gsl_vector_set_all(ss, step);
  gsl_multimin_function fn{&objective, 3, const_cast<FitProblem*>(&p)};
  gsl_multimin_fminimizer_set(s, &fn, x, ss);
  for (int it = 0; it < 4000; ++it) {
    if (gsl_multimin_fminimizer_iterate(s)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-11) == GSL_SUCCESS) break;
  }
  Candidate c{s->fval, {gsl_vector_get(s->x, 0), gsl_vector_get(s->x, 1), gsl_vector_get(s->x, 2)}};
  gsl_vector_free(x);
  gsl_vector_free(ss);
  gsl_multimin_fminimizer_free(s);
  return c;
}

}  // namespace

FittedGainDistribution fit_singh_maddala(double lambda, double radius, const LinkBudget& b, const FitOptions& o) {
  if (!(lambda > 0.0) || !(radius > 0.0)) throw std::domain_error("fit_singh_maddala: needs lambda, radius > 0");
  const double a = disk_mass(lambda, radius);
  const FitProblem p = make_problem(a, b.exponent, o);

  Candidate best{1e300, {0, 0, 0}};
  for (double mu : {0.3, 1.0, 3.0})
    for (double th : {0.8, 1.2})
      for (double m : {0.4, 0.9}) {
        const double start[3] = {std::log(mu), std::log(th), std::log(m)};
        auto c = nelder_mead(p, start, 0.3);
        if (c.f < best.f) best = c;
      }
  // Restarts shake the simplex out of the kinks of the sup norm.
  for (double step : {0.1, 0.03, 0.01, 0.003}) {
    auto c = nelder_mead(p, best.v, step);
    if (c.f <= best.f) best = c;
  }
  FittedGainDistribution fit;
  fit.mu = std::exp(best.v[0]) * fit_scale(a, b.exponent) * path_loss(radius, b);
  fit.theta = std::exp(best.v[1]);
  fit.m = std::exp(best.v[2]);
  fit.fit_error = best.f;
  if (fit.fit_error > o.tolerance)
    throw NumericError("Singh-Maddala fit sup error above tolerance", fit.fit_error);
  return fit;
}

double fit_sup_error(const FittedGainDistribution& fit, double lambda, double radius, const LinkBudget& b,
                     const FitOptions& o) {
  const double a = disk_mass(lambda, radius);
  const FitProblem p = make_problem(a, b.exponent, o);
  const double unit = fit_scale(a, b.exponent) * path_loss(radius, b);
  return sup_error(p, fit.mu / unit, fit.theta, fit.m);
}

FitCache::FitCache(std::string path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  const auto doc = nlohmann::json::parse(in);
  for (const auto& e : doc) {
    Entry en{e.at("lambda"), e.at("radius"), e.at("exponent"), e.at("ell_r"), {}};
    en.fit = {e.at("mu"), e.at("theta"), e.at("m"), e.at("fit_error")};
    entries_.push_back(en);
  }
}

namespace {
bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }
}  // namespace

FittedGainDistribution FitCache::get(double lambda, double radius, const LinkBudget& b) {
  const double ell = path_loss(radius, b);
  {
    std::lock_guard lock(mu_);
    for (const auto& e : entries_)
      if (close(e.lambda, lambda) && close(e.radius, radius) && close(e.exponent, b.exponent) && close(e.ell, ell))
        return e.fit;
  }
  const auto fit = fit_singh_maddala(lambda, radius, b);
  std::lock_guard lock(mu_);
  entries_.push_back({lambda, radius, b.exponent, ell, fit});
  return fit;
}

void FitCache::save() const {
  if (path_.empty()) return;
  std::lock_guard lock(mu_);
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : entries_)
    doc.push_back({{"lambda", e.lambda},
                   {"radius", e.radius},
                   {"exponent", e.exponent},
                   {"ell_r", e.ell},
                   {"mu", e.fit.mu},
                   {"theta", e.fit.theta},
                   {"m", e.fit.m},
                   {"fit_error", e.fit.fit_error}});
  std::ofstream out(path_);
  out << doc.dump(2) << "\n";
}

std::size_t FitCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace mmtc::channel
