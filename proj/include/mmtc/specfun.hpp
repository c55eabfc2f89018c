#pragma once

#include <complex>
#include <vector>

#include "mmtc/errors.hpp"

namespace mmtc::specfun {

/// Lower incomplete gamma γ(a, x) for a > 0, x >= 0. Relative error <= 1e-12.
double lower_incomplete_gamma(double a, double x);

/// Upper incomplete gamma Γ(a, x).
double upper_incomplete_gamma(double a, double x);

/// 1 - a x^{-a} γ(a, x), evaluated without cancellation as x -> 0.
/// This is the lower tail of the gain CDF over an annulus.
double scaled_gamma_complement(double a, double x);

/// Principal-branch-free log Γ(z): only exp(log_gamma(z)) is meaningful.
std::complex<double> log_gamma(std::complex<double> z);

struct MeijerSpec {
  int m = 0, n = 0, p = 0, q = 0;
  std::vector<double> a;  // size p
  std::vector<double> b;  // size q
};

struct FoxParam {
  double coef;
  double scale;
};

struct FoxSpec {
  int m = 0, n = 0, p = 0, q = 0;
  std::vector<FoxParam> a;
  std::vector<FoxParam> b;
};

/// Meijer G^{m,n}_{p,q}(x) by a vertical Mellin-Barnes contour, or by the
/// left residue series when x < crossover. Families whose contour integral
/// does not converge absolutely raise UnsupportedFamily.
double meijer_g(const MeijerSpec& spec, double x, double crossover = 1e-3);

/// Fox H^{m,n}_{p,q}(x), same method and restrictions as meijer_g.
double fox_h(const FoxSpec& spec, double x, double crossover = 1e-3);

/// Both tails of a positive random variable W at a point.
struct Tails {
  double lower;  // P[W < w]
  double upper;  // P[W >= w]
};

/// Tails of a product of n independent exponentials whose means multiply to
/// mean_product, evaluated at z. Each tail keeps relative accuracy when small.
Tails prod_exp_tails(double z, int n, double mean_product = 1.0);

/// P[prod of n exponentials >= z] = G^{n,0}_{0,n}[z / mean_product | 1_{n-1}, 0].
double prod_exp_ccdf(double z, int n, double mean_product = 1.0);

/// Tails of ξ · E · u^{-ε} at x, where ξ is a product of n >= 1 unit
/// exponentials, E a unit exponential and u uniform (by area) on the annulus
/// [(k-1)/K, k/K] of the unit disk. This is the combination
/// (2/ε)[χ0 G(x u_o^ε) - χ1 G(x u_i^ε)] with
/// G = G^{n+1,1}_{1,n+2}[· | 1-2/ε ; 1_n, 0, -2/ε].
Tails annulus_chain_tails(double x, int n, double exponent, int users, int k);

/// Tails of ξ · V at w, where ξ is a product of n unit exponentials and V is
/// Singh-Maddala(μ, θ, m): the Fox H^{n+1,1}_{1,n+1} form divided by Γ(m).
Tails singh_maddala_chain_tails(double w, int n, double mu, double theta, double m);

/// Leading small-x term of P[prod of (n+1) unit exponentials < x], i.e. minus
/// the residue of Γ(1+s)^n Γ(s) x^{-s} at s = -1. Coefficients come from a
/// Cauchy-integral derivative of the regular part.
double residue_asymptote(double x, int n);

/// Taylor coefficients g_0..g_n of (s+1)^{n+1} Γ(1+s)^n Γ(s) about s = -1.
std::vector<double> residue_coefficients(int n);

}  // namespace mmtc::specfun
