#include "mmtc/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mmtc/mellin.hpp"

namespace mmtc::specfun {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;

// Series Σ x^k / (a (a+1) ... (a+k)), so γ(a,x) = x^a e^{-x} · series.
double gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < kMaxIter; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) return sum;
  }
  throw NumericError("lower_incomplete_gamma: series did not converge");
}

// Modified Lentz continued fraction for Γ(a,x) e^{x} x^{-a}.
double gamma_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericError("upper_incomplete_gamma: continued fraction did not converge");
}

void check_args(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) throw std::domain_error("incomplete gamma needs a > 0 and x >= 0");
}

}  // namespace

double lower_incomplete_gamma(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return std::tgamma(a);
  if (x < a + 1.0) return std::exp(a * std::log(x) - x) * gamma_series(a, x);
  return std::tgamma(a) - std::exp(a * std::log(x) - x) * gamma_cf(a, x);
}

double upper_incomplete_gamma(double a, double x) {
  check_args(a, x);
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return std::tgamma(a) - lower_incomplete_gamma(a, x);
  return std::exp(a * std::log(x) - x) * gamma_cf(a, x);
}

double scaled_gamma_complement(double a, double x) {
  check_args(a, x);
  if (x == 0.0) return 0.0;
  if (x > 1.0) return 1.0 - a * std::exp(-a * std::log(x)) * lower_incomplete_gamma(a, x);
  // a Σ_{k>=1} (-1)^{k+1} x^k / (k! (a+k))
  double pw = 1.0;
  double sum = 0.0;
  for (int k = 1; k < 200; ++k) {
    pw *= x / k;
    const double term = pw / (a + k);
    sum += (k % 2 == 1) ? term : -term;
    if (term < kEps * std::abs(sum)) break;
  }
  return a * sum;
}

std::complex<double> log_gamma(std::complex<double> z) {
  static constexpr double kStirling[] = {1.0 / 12.0,    -1.0 / 360.0,      1.0 / 1260.0, -1.0 / 1680.0,
                                         1.0 / 1188.0,  -691.0 / 360360.0, 1.0 / 156.0,  -3617.0 / 122400.0};
  std::complex<double> shift = 0.0;
  std::complex<double> prod = 1.0;
  while (z.real() < 10.0) {
    prod *= z;
    z += 1.0;
    if (std::abs(prod) > 1e200) {
      shift += std::log(prod);
      prod = 1.0;
    }
  }
  shift += std::log(prod);
  const std::complex<double> inv = 1.0 / z;
  const std::complex<double> inv2 = inv * inv;
  std::complex<double> series = 0.0;
  std::complex<double> pw = inv;
  for (double c : kStirling) {
    series += c * pw;
    pw *= inv2;
  }
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + series - shift;
}

namespace {

mellin::Integrand meijer_integrand(const MeijerSpec& s, double x) {
  if (s.a.size() != static_cast<std::size_t>(s.p) || s.b.size() != static_cast<std::size_t>(s.q) || s.m < 0 ||
      s.n < 0 || s.m > s.q || s.n > s.p)
    throw UnsupportedFamily("meijer_g: inconsistent (m, n, p, q) and parameter lists");
  std::vector<mellin::GammaFactor> f;
  for (int j = 0; j < s.q; ++j) {
    if (j < s.m) {
      f.push_back({s.b[j], 1.0, 1});
    } else {
      f.push_back({1.0 - s.b[j], -1.0, -1});
    }
  }
  for (int j = 0; j < s.p; ++j) {
    if (j < s.n) {
      f.push_back({1.0 - s.a[j], -1.0, 1});
    } else {
      f.push_back({s.a[j], 1.0, -1});
    }
  }
  return mellin::Integrand(std::move(f), std::log(x));
}

mellin::Integrand fox_integrand(const FoxSpec& s, double x) {
  if (s.a.size() != static_cast<std::size_t>(s.p) || s.b.size() != static_cast<std::size_t>(s.q) || s.m < 0 ||
      s.n < 0 || s.m > s.q || s.n > s.p)
    throw UnsupportedFamily("fox_h: inconsistent (m, n, p, q) and parameter lists");
  std::vector<mellin::GammaFactor> f;
  for (int j = 0; j < s.q; ++j) {
    if (!(s.b[j].scale > 0.0)) throw UnsupportedFamily("fox_h: scales must be positive");
    if (j < s.m) {
      f.push_back({s.b[j].coef, s.b[j].scale, 1});
    } else {
      f.push_back({1.0 - s.b[j].coef, -s.b[j].scale, -1});
    }
  }
  for (int j = 0; j < s.p; ++j) {
    if (!(s.a[j].scale > 0.0)) throw UnsupportedFamily("fox_h: scales must be positive");
    if (j < s.n) {
      f.push_back({1.0 - s.a[j].coef, -s.a[j].scale, 1});
    } else {
      f.push_back({s.a[j].coef, s.a[j].scale, -1});
    }
  }
  return mellin::Integrand(std::move(f), std::log(x));
}

// Contour sums can overshoot [0, 1] by rounding once a tail is ~1e-15.
Tails clamped(double lower, double upper) {
  return {std::clamp(lower, 0.0, 1.0), std::clamp(upper, 0.0, 1.0)};
}

double evaluate(const mellin::Integrand& f, double crossover, const char* who) {
  if (!f.converges()) throw UnsupportedFamily(std::string(who) + ": contour integral does not converge");
  auto left = f.left_poles(1);
  auto right = f.right_poles(1);
  if (left.empty()) throw UnsupportedFamily(std::string(who) + ": no left poles");
  if (!right.empty() && !(left.front() < right.front()))
    throw UnsupportedFamily(std::string(who) + ": poles do not separate");
  return mellin::fundamental(f, crossover);
}

}  // namespace

double meijer_g(const MeijerSpec& spec, double x, double crossover) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("meijer_g: x must be positive and finite");
  return evaluate(meijer_integrand(spec, x), crossover, "meijer_g");
}

double fox_h(const FoxSpec& spec, double x, double crossover) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("fox_h: x must be positive and finite");
  return evaluate(fox_integrand(spec, x), crossover, "fox_h");
}

Tails prod_exp_tails(double z, int n, double mean_product) {
  if (n < 1) throw std::domain_error("prod_exp_tails: n must be >= 1");
  if (!(mean_product > 0.0)) throw std::domain_error("prod_exp_tails: mean product must be positive");
  if (!(z > 0.0)) return {0.0, 1.0};
  if (std::isinf(z)) return {1.0, 0.0};
  const double x = z / mean_product;
  if (n == 1) return {-std::expm1(-x), std::exp(-x)};
  mellin::Integrand f({{1.0, 1.0, n - 1}, {0.0, 1.0, 1}}, std::log(x));
  const auto s = mellin::split_first_left(f, 1e-3);
  return clamped(s.lower, s.upper);
}

double prod_exp_ccdf(double z, int n, double mean_product) { return prod_exp_tails(z, n, mean_product).upper; }

Tails annulus_chain_tails(double x, int n, double exponent, int users, int k) {
  if (n < 1) throw std::domain_error("annulus_chain_tails: n must be >= 1");
  if (users < 1 || k < 1 || k > users) throw std::domain_error("annulus index outside [1, K]");
  if (!(x > 0.0)) return {0.0, 1.0};
  if (std::isinf(x)) return {1.0, 0.0};
  const double s = 2.0 / exponent;
  const double uo = static_cast<double>(k) / users;
  const double ui = static_cast<double>(k - 1) / users;
  const double chi0 = uo * uo / (uo * uo - ui * ui);
  const double chi1 = ui * ui / (uo * uo - ui * ui);
  auto piece = [&](double u) {
    mellin::Integrand f({{1.0, 1.0, n}, {0.0, 1.0, 1}, {s, -1.0, 1}, {1.0 + s, -1.0, -1}},
                        std::log(x) + exponent * std::log(u));
    return mellin::split_first_left(f, 1e-3);
  };
  const auto o = piece(uo);
  Tails t{s * chi0 * o.lower, s * chi0 * o.upper};
  if (k > 1) {
    const auto i = piece(ui);
    t.lower -= s * chi1 * i.lower;
    t.upper -= s * chi1 * i.upper;
  }
  return clamped(t.lower, t.upper);
}

Tails singh_maddala_chain_tails(double w, int n, double mu, double theta, double m) {
  if (n < 0 || !(mu > 0.0) || !(theta > 0.0) || !(m > 0.0))
    throw std::domain_error("singh_maddala_chain_tails: bad parameters");
  if (!(w > 0.0)) return {0.0, 1.0};
  if (std::isinf(w)) return {1.0, 0.0};
  const double lx = theta * std::log(w / mu);
  if (n == 0) {
    const double l1p = lx > 40.0 ? lx + std::log1p(std::exp(-lx)) : std::log1p(std::exp(lx));
    return {-std::expm1(-m * l1p), std::exp(-m * l1p)};
  }
  mellin::Integrand f({{0.0, 1.0, 1}, {1.0, theta, n}, {m, -1.0, 1}}, lx);
  const auto sp = mellin::split_first_left(f, 1e-3);
  const double g = std::tgamma(m);
  return clamped(sp.lower / g, sp.upper / g);
}

std::vector<double> residue_coefficients(int n) {
  if (n < 0) throw std::domain_error("residue_coefficients: n must be >= 0");
  // Cauchy integral on |s+1| = 1/2; the nearest other poles sit at 0 and -2.
  constexpr int kPts = 128;
  constexpr double r = 0.5;
  std::vector<std::complex<double>> acc(n + 1, 0.0);
  for (int j = 0; j < kPts; ++j) {
    const double th = 2.0 * std::numbers::pi * (j + 0.5) / kPts;
    const std::complex<double> w = std::polar(r, th);
    const std::complex<double> s = -1.0 + w;
    const std::complex<double> g =
        std::exp(static_cast<double>(n + 1) * std::log(w) + static_cast<double>(n) * log_gamma(1.0 + s) + log_gamma(s));
    std::complex<double> wk = 1.0;
    for (int k = 0; k <= n; ++k) {
      acc[k] += g / wk;
      wk *= w;
    }
  }
  std::vector<double> out(n + 1);
  for (int k = 0; k <= n; ++k) out[k] = acc[k].real() / kPts;
  return out;
}

double residue_asymptote(double x, int n) {
  if (!(x > 0.0)) throw std::domain_error("residue_asymptote: x must be positive");
  const auto g = residue_coefficients(n);
  const double L = -std::log(x);
  double sum = 0.0;
  double pw = 1.0;  // L^r / r!
  for (int r = 0; r <= n; ++r) {
    sum += g[n - r] * pw;
    pw *= L / (r + 1);
  }
  return -x * sum;
}

}  // namespace mmtc::specfun
