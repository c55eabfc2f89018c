#pragma once

#include <complex>
#include <vector>

namespace mmtc::mellin {

/// Γ(shift + scale·s)^power. Negative powers sit in the denominator.
struct GammaFactor {
  double shift;
  double scale;
  int power;
};

/// F(s) = prod Γ(shift_j + scale_j s)^{power_j} · x^{-s}.
class Integrand {
 public:
  Integrand(std::vector<GammaFactor> factors, double log_x);

  std::complex<double> log_value(std::complex<double> s) const;
  std::complex<double> value(std::complex<double> s) const { return std::exp(log_value(s)); }
  double log_abs(double c) const;  // log|F(c)| on the real axis

  /// Net poles left of the fundamental strip, nearest first.
  std::vector<double> left_poles(std::size_t count) const;
  /// Net poles right of the fundamental strip, nearest first (may be empty).
  std::vector<double> right_poles(std::size_t count) const;

  double log_x() const { return log_x_; }
  const std::vector<GammaFactor>& factors() const { return factors_; }

  /// True when the vertical contour integral converges absolutely.
  bool converges() const;

 private:
  int pole_order(double s) const;
  std::vector<GammaFactor> factors_;
  double log_x_;
};

/// (1/2πi) ∫ F(s) ds along Re s = c, trapezoid rule with step tied to the pole
/// distance d and the local width of |F|.
double line_integral(const Integrand& f, double c, double d);

/// Sum of residues inside a circle, by the trapezoid rule on the circle.
double circle_residue(const Integrand& f, double center, double radius);

/// c minimising log|F| on (lo, hi); hi may be +inf.
double saddle(const Integrand& f, double lo, double hi);

/// Value of the contour integral on the fundamental strip.
double fundamental(const Integrand& f, double crossover);

/// Split of the fundamental integral at the nearest left pole p0:
/// upper = fundamental value, lower = Res(p0) - upper. Both keep relative
/// accuracy: whichever is small is computed directly.
struct Split {
  double upper;
  double lower;
  double residue;
};
Split split_first_left(const Integrand& f, double crossover);

}  // namespace mmtc::mellin
