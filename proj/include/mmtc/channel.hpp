#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "mmtc/scenario.hpp"
#include "mmtc/specfun.hpp"

namespace mmtc::channel {

/// Path-loss intercept 𝓛 (linear), from 22.7 + 26 log10 fc - Gt - Gr dB.
double intercept(const LinkBudget& b);

/// ℓ(x) = 𝓛 (d0 / x)^ε.
double path_loss(double x, const LinkBudget& b);

/// The same loss in dB, from the log-distance formula.
double path_loss_db(double x, const LinkBudget& b);

/// χ^{[i]}_k = (k - i)^2 / (k^2 - (k - 1)^2), i in {0, 1}.
double chi(int k, int i);

/// Exponential hop gain with mean ℓ(distance).
specfun::Tails hop_gain_tails(double phi, double distance, const LinkBudget& b);

/// Gain of a uniform device in annulus k of K (closed form with incomplete gamma).
specfun::Tails annulus_gain_tails(double phi, double radius, int users, int k, const LinkBudget& b);

/// Gain of the nearest active device, by quadrature over its distance law.
specfun::Tails nearest_gain_tails(double phi, double lambda, double radius, const LinkBudget& b);

/// Small-argument slopes: F(φ) ≈ slope · φ / ℓ(r_t).
double annulus_slope(int users, int k, double exponent);
double nearest_slope(double lambda, double radius, double exponent);

struct FitOptions {
  double decades_below = 4.0;  // grid reaches 10^-4 below min(ℓ(r_t), typical scale)
  double decades_above = 4.0;
  int points_per_decade = 16;
  double tolerance = 1e-2;  // sup-norm acceptance
};

/// Singh-Maddala fit of the nearest-device gain CDF by minimising the sup
/// norm over a log grid (multi-start Nelder-Mead). Raises NumericError when
/// the best sup error exceeds options.tolerance.
FittedGainDistribution fit_singh_maddala(double lambda, double radius, const LinkBudget& b,
                                         const FitOptions& options = {});

/// Sup-norm distance between a fit and the numerical CDF over the fit grid.
double fit_sup_error(const FittedGainDistribution& fit, double lambda, double radius, const LinkBudget& b,
                     const FitOptions& options = {});

/// Fits keyed by (lambda, r_t, ε, ℓ(r_t)), optionally backed by a JSON file.
class FitCache {
 public:
  FitCache() = default;
  explicit FitCache(std::string path);

  FittedGainDistribution get(double lambda, double radius, const LinkBudget& b);
  void save() const;
  std::size_t size() const;

 private:
  struct Entry {
    double lambda, radius, exponent, ell;
    FittedGainDistribution fit;
  };
  std::string path_;
  std::vector<Entry> entries_;
  mutable std::mutex mu_;
};

}  // namespace mmtc::channel
