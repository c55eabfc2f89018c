#pragma once

#include <vector>

#include "mmtc/random.hpp"

namespace mmtc::geometry {

/// P[no point of a PPP with density lambda in a disk of the given radius].
double null_probability(double lambda, double radius);
double log_null_probability(double lambda, double radius);

/// Annulus k of K over a disk: [(k-1) r / K, k r / K).
struct Annulus {
  double inner;
  double outer;
  double density;  // lambda / K after thinning
};
Annulus annulus(double radius, int users, int k, double lambda);

/// Density of a uniform point in annulus k. Equals 2 K r / r_t^2 when
/// 2k - 1 = K, and is normalised for every k.
double annulus_distance_pdf(double r, double radius, int users, int k);

/// Nearest-point distance in the disk given that the disk is not empty.
double nearest_distance_pdf(double r, double lambda, double radius);
double nearest_distance_cdf(double r, double lambda, double radius);

struct Point {
  double x;
  double y;
};

/// One realisation of a homogeneous PPP on the disk centred at the origin.
std::vector<Point> sample_hppp_disk(double lambda, double radius, CounterRng& rng);

double sample_annulus_distance(double radius, int users, int k, CounterRng& rng);
/// Nearest distance conditioned on a non-empty disk, by inversion.
double sample_nearest_distance(double lambda, double radius, CounterRng& rng);

}  // namespace mmtc::geometry
