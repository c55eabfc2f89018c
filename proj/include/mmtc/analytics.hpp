#pragma once

#include <array>
#include <vector>

#include "mmtc/scenario.hpp"
#include "mmtc/specfun.hpp"

namespace mmtc::analytics {

/// Maximum reachable rate of s_M; NaN when p_M = 1 (no interference floor).
double mrtr_message(Architecture arch, double alpha, int nodes, double p_message);

/// Maximum reachable rate of a CoM device signal given the power below it in
/// the decoding order; NaN for the innermost device (prefix 0).
double mrtr_device(Architecture arch, double alpha, int nodes, double p_device, double prefix);

/// Target rate min(fraction · MRTR, cap), or cap when the MRTR is undefined.
double target_rate(double mrtr, const RatePolicy& policy);

/// p_M for the message and the rest split over devices in proportion to
/// 2^{k-1}; target rates from the MRTRs of `rate_arch` at time-switching
/// ratio alpha.
AllocationPlan default_plan(const Topology& topo, Pairing pairing, Architecture rate_arch, double alpha,
                            double p_message, const RatePolicy& policy);

/// Decoding thresholds on X for hop t, indexed [i][j]: i = D_{t+1} harvests,
/// j = D_t superposes Type-II signals. +inf marks an undecodable case.
using ThresholdGrid = std::array<std::array<double, 2>, 2>;
ThresholdGrid type1_thresholds(const Scenario& s, int t);

/// Thresholds on Y (CoM) or Z (QoM) for device k of slot t, indexed by i.
std::array<double, 2> type2_thresholds(const Scenario& s, int t, int k);

/// Tails of the received SNR X at D_{t+1}, Y at CoM device k and Z at the QoM
/// device of slot t.
specfun::Tails tails_x(const Scenario& s, int t, double x);
specfun::Tails tails_y(const Scenario& s, int t, int k, double y);
specfun::Tails tails_z(const Scenario& s, int t, double z);

double op_type1(const Scenario& s, int t);
double op_type2(const Scenario& s, int t, int k);

/// Every outage figure of one scenario, computed once.
struct Report {
  std::vector<double> hop;                    // Type-I hop t
  std::vector<std::vector<double>> device;    // Type-II device (t, k)
  std::vector<std::vector<double>> device_e2e;
  double e2e_type1 = 0.0;
  double throughput = 0.0;
};

/// Outages under the independent-hop product rule. A Type-II device in slot t
/// needs hops 1..t-1 (s_M reached D_t) and its own decoding.
Report evaluate(const Scenario& s);

/// Same, with the small-argument asymptotes in place of the exact CDFs.
Report evaluate_asymptotic(const Scenario& s);

double sum_throughput(const Report& r, const Scenario& s);

/// BW · throughput / (P0 Σ ρ0_j) in bit/J.
double energy_efficiency(const Scenario& s, double throughput);

/// Leading small-argument CDFs (harvesting-chain mixtures of residue terms,
/// each term limited to [0, 1]).
double asymptotic_cdf_x(const Scenario& s, int t, double x);
double asymptotic_cdf_y(const Scenario& s, int t, int k, double y);
double asymptotic_cdf_z(const Scenario& s, int t, double z);

struct DiversityFit {
  double slope;  // negative log-log slope
  int used;
  int excluded;  // non-finite or floored points dropped from the window
};

/// Least-squares slope of log10(OP) against SNR/10 over the last `window_db`.
DiversityFit diversity_order_estimate(const std::vector<double>& snr_db, const std::vector<double>& op,
                                      double window_db = 10.0);

}  // namespace mmtc::analytics
