#include "mmtc/mellin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "mmtc/errors.hpp"
#include "mmtc/specfun.hpp"

namespace mmtc::mellin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kCirclePoints = 96;
constexpr double kClusterGap = 0.02;

bool is_gamma_pole(double arg) {
  if (arg > 0.5) return false;
  return std::abs(arg - std::round(arg)) < 1e-11;
}

double dlog_abs(const Integrand& f, double c) {
  double d = -f.log_x();
  for (const auto& g : f.factors()) d += g.power * g.scale * boost::math::digamma(g.shift + g.scale * c);
  return d;
}

double d2log_abs(const Integrand& f, double c) {
  double d = 0.0;
  for (const auto& g : f.factors()) d += g.power * g.scale * g.scale * boost::math::trigamma(g.shift + g.scale * c);
  return d;
}

// Consecutive poles closer than kClusterGap share one circle.
struct Group {
  double lo, hi;
};

std::vector<Group> cluster(const std::vector<double>& poles) {
  std::vector<Group> out;
  for (double p : poles) {
    if (!out.empty() && std::abs(p - out.back().lo) < kClusterGap) {
      out.back().lo = std::min(out.back().lo, p);
      out.back().hi = std::max(out.back().hi, p);
    } else {
      out.push_back({p, p});
    }
  }
  return out;
}

double residue_radius_cap(const Integrand& f) {
  const double lx = std::abs(f.log_x());
  return lx > 4.0 ? 2.0 / lx : 0.5;
}

// Residue of one left-pole group; neighbours bound the circle.
double group_residue(const Integrand& f, const Group& g, double left_neighbor, double right_neighbor) {
  const double center = 0.5 * (g.lo + g.hi);
  const double half = 0.5 * (g.hi - g.lo);
  double room = std::min(g.lo - left_neighbor, right_neighbor - g.hi);
  double margin = std::min(0.5 * room, residue_radius_cap(f));
  return circle_residue(f, center, half + margin);
}

}  // namespace

Integrand::Integrand(std::vector<GammaFactor> factors, double log_x) : log_x_(log_x) {
  for (const auto& g : factors) {
    if (g.power == 0) continue;
    auto it = std::find_if(factors_.begin(), factors_.end(),
                           [&](const GammaFactor& h) { return h.shift == g.shift && h.scale == g.scale; });
    if (it != factors_.end()) {
      it->power += g.power;
    } else {
      factors_.push_back(g);
    }
  }
  std::erase_if(factors_, [](const GammaFactor& g) { return g.power == 0; });
}

std::complex<double> Integrand::log_value(std::complex<double> s) const {
  std::complex<double> acc = -s * log_x_;
  for (const auto& g : factors_) acc += static_cast<double>(g.power) * specfun::log_gamma(g.shift + g.scale * s);
  return acc;
}

double Integrand::log_abs(double c) const {
  double acc = -c * log_x_;
  for (const auto& g : factors_) {
    const double arg = g.shift + g.scale * c;
    if (is_gamma_pole(arg)) return g.power > 0 ? kInf : -kInf;
    acc += g.power * std::lgamma(arg);
  }
  return acc;
}

int Integrand::pole_order(double s) const {
  int order = 0;
  for (const auto& g : factors_)
    if (is_gamma_pole(g.shift + g.scale * s)) order += g.power;
  return order;
}

bool Integrand::converges() const {
  double kappa = 0.0;
  for (const auto& g : factors_) {
    if (g.scale == 0.0) return false;
    kappa += g.power * std::abs(g.scale);
  }
  return kappa > 1e-12;
}

namespace {

std::vector<double> collect_poles(const Integrand& f, std::size_t count, bool left) {
  std::vector<double> cand;
  for (const auto& g : f.factors()) {
    if (g.power <= 0) continue;
    if ((g.scale > 0) != left) continue;
    for (std::size_t k = 0; k < count; ++k) cand.push_back((-static_cast<double>(k) - g.shift) / g.scale);
  }
  if (left) {
    std::sort(cand.begin(), cand.end(), std::greater<>());
  } else {
    std::sort(cand.begin(), cand.end());
  }
  std::vector<double> out;
  for (double p : cand) {
    if (!out.empty() && std::abs(p - out.back()) < 1e-11) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<double> Integrand::left_poles(std::size_t count) const {
  std::vector<double> out;
  for (double p : collect_poles(*this, count, true))
    if (pole_order(p) > 0) out.push_back(p);
  if (out.size() > count) out.resize(count);
  return out;
}

std::vector<double> Integrand::right_poles(std::size_t count) const {
  std::vector<double> out;
  for (double p : collect_poles(*this, count, false))
    if (pole_order(p) > 0) out.push_back(p);
  if (out.size() > count) out.resize(count);
  return out;
}

double saddle(const Integrand& f, double lo, double hi) {
  double a = lo;
  double b = hi;
  if (!std::isfinite(b)) {
    double step = std::max(1.0, std::abs(lo));
    b = lo + step;
    while (dlog_abs(f, b) < 0.0) {
      step *= 2.0;
      b = lo + step;
      if (step > 1e300) throw NumericError("saddle: no upper bracket");
    }
  }
  // Keep strictly inside the strip; the poles make the derivative blow up
  // with the right signs, so plain bisection is safe.
  const double width = b - a;
  double x0 = a + 1e-9 * width;
  double x1 = b - (std::isfinite(hi) ? 1e-9 * width : 0.0);
  if (dlog_abs(f, x0) > 0.0) return x0 + 0.05 * width;
  if (dlog_abs(f, x1) < 0.0) return x1 - (std::isfinite(hi) ? 0.05 * width : 0.0);
  for (int it = 0; it < 200 && x1 - x0 > 1e-13 * std::max(1.0, std::abs(x0)); ++it) {
    const double mid = 0.5 * (x0 + x1);
    if (dlog_abs(f, mid) < 0.0) {
      x0 = mid;
    } else {
      x1 = mid;
    }
  }
  const double c = 0.5 * (x0 + x1);
  // A contour hugging a pole forces a tiny step; stay a little away.
  const double guard = 0.02 * std::min(width, 1.0);
  return std::clamp(c, lo + guard, std::isfinite(hi) ? hi - guard : kInf);
}

double line_integral(const Integrand& f, double c, double d) {
  const double curv = d2log_abs(f, c);
  double h = std::min(d / 8.0, 0.25);
  if (curv > 0.0) h = std::min(h, 0.5 / std::sqrt(curv));
  if (!(h > 0.0)) throw NumericError("line_integral: degenerate step");

  const std::complex<double> base = f.log_value({c, 0.0});
  const double l0 = base.real();
  double sum = 0.5 * std::exp(base - l0).real();
  double peak = std::abs(std::exp(base - l0));
  int quiet = 0;
  constexpr long kMaxSteps = 4'000'000;
  long k = 1;
  for (; k < kMaxSteps; ++k) {
    const std::complex<double> v = std::exp(f.log_value({c, k * h}) - l0);
    sum += v.real();
    const double mag = std::abs(v);
    peak = std::max(peak, mag);
    if (mag < 1e-18 * peak) {
      if (++quiet >= 4) break;
    } else {
      quiet = 0;
    }
  }
  if (k >= kMaxSteps) throw NumericError("line_integral: contour tail did not decay");
  return h / std::numbers::pi * sum * std::exp(l0);
}

double circle_residue(const Integrand& f, double center, double radius) {
  std::complex<double> acc = 0.0;
  // The log of the integrand at the circle's right-most point sets the scale.
  double scale = -kInf;
  std::vector<std::complex<double>> logs(kCirclePoints);
  for (int j = 0; j < kCirclePoints; ++j) {
    const double th = 2.0 * std::numbers::pi * (j + 0.5) / kCirclePoints;
    const std::complex<double> w = std::polar(radius, th);
    logs[j] = f.log_value(center + w) + std::log(w);
    scale = std::max(scale, logs[j].real());
  }
  for (int j = 0; j < kCirclePoints; ++j) acc += std::exp(logs[j] - scale);
  return (acc / static_cast<double>(kCirclePoints)).real() * std::exp(scale);
}

namespace {

// Σ residues of left-pole groups starting at index `first`, until the terms
// stop contributing.
double left_residue_series(const Integrand& f, std::size_t first, double right_bound) {
  std::size_t want = 64;
  for (;;) {
    auto poles = f.left_poles(want);
    auto groups = cluster(poles);
    double sum = 0.0;
    int small = 0;
    for (std::size_t i = first; i + 1 < groups.size(); ++i) {
      const double right = i == 0 ? right_bound : groups[i - 1].lo;
      const double term = group_residue(f, groups[i], groups[i + 1].hi, right);
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum) || term == 0.0) {
        if (++small >= 2) return sum;
      } else {
        small = 0;
      }
    }
    if (want > 4096) throw NumericError("residue series did not converge", std::abs(sum));
    want *= 4;
  }
}

double strip_right(const Integrand& f) {
  auto r = f.right_poles(1);
  return r.empty() ? kInf : r.front();
}

}  // namespace

double fundamental(const Integrand& f, double crossover) {
  auto left = f.left_poles(1);
  const double hi = strip_right(f);
  if (left.empty()) {
    throw UnsupportedFamily("contour has no left poles");
  }
  const double lo = left.front();
  if (!(lo < hi)) throw UnsupportedFamily("empty fundamental strip");
  if (f.log_x() < std::log(crossover)) return left_residue_series(f, 0, hi);
  const double c = saddle(f, lo, hi);
  return line_integral(f, c, std::min(c - lo, hi - c));
}

Split split_first_left(const Integrand& f, double crossover) {
  auto left = f.left_poles(2);
  const double hi = strip_right(f);
  if (left.size() < 2) throw UnsupportedFamily("split needs two left poles");
  const double p0 = left[0];
  const double p1 = left[1];
  if (!(p0 < hi)) throw UnsupportedFamily("empty fundamental strip");

  Split out{};
  const double r0 = 0.5 * std::min({p0 - p1, hi - p0, 2.0 * residue_radius_cap(f)});
  out.residue = circle_residue(f, p0, r0);

  if (f.log_x() < std::log(crossover)) {
    out.lower = -left_residue_series(f, 1, p0);
    out.upper = out.residue - out.lower;
    return out;
  }
  const double c = saddle(f, p0, hi);
  out.upper = line_integral(f, c, std::min(c - p0, hi - c));
  if (out.upper > 0.5 * out.residue) {
    const double c1 = saddle(f, p1, p0);
    out.lower = -line_integral(f, c1, std::min(c1 - p1, p0 - c1));
  } else {
    out.lower = out.residue - out.upper;
  }
  return out;
}

}  // namespace mmtc::mellin
