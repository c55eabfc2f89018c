#pragma once

#include <string>
#include <vector>

namespace mmtc {

/// Link-budget constants. Power levels in dBm, gains in dBi.
struct LinkBudget {
  double p0_dbm = 0.0;
  double noise_dbm_per_hz = -174.0;
  double bandwidth_hz = 10e6;
  double carrier_ghz = 3.0;
  double gain_tx_dbi = 5.0;
  double gain_rx_dbi = 5.0;
  double reference_m = 1.0;
  double exponent = 3.67;

  double p0_watt() const;
  double noise_watt() const;
  double noise_dbm() const;
  /// Transmit SNR γ̄0 = P0 / σ².
  double snr0() const;
};

/// Column t of the topology matrix: the hop D_t -> D_{t+1}, and the Type-II
/// disk around D_t.
struct Hop {
  double distance;  // D_t -> D_{t+1} [m]
  double radius;    // disk radius r_t [m]
  int users;        // K_t Type-II devices served by CoM
  double lambda_active = 1e-2;
  double lambda_inactive = 1e-3;
};

struct Topology {
  std::vector<Hop> hops;

  int nodes() const { return static_cast<int>(hops.size()) + 1; }
  /// Hop t, 1-based.
  const Hop& hop(int t) const { return hops.at(static_cast<std::size_t>(t - 1)); }
  void validate() const;
};

/// Preset topologies T1..T5 (rows: distances, radii, users).
Topology preset_topology(const std::string& name, double lambda_active = 1e-2, double lambda_inactive = 1e-3);

enum class Architecture { bteh, bpeh };
enum class Pairing { com, qom };

/// Per-node EH parameters, node q at index q-1. The first and last nodes
/// never harvest.
struct EhPolicy {
  Architecture arch = Architecture::bteh;
  std::vector<double> rho, alpha, beta, eta;

  static EhPolicy uniform(int nodes, Architecture arch, double rho, double alpha, double beta, double eta);
  int nodes() const { return static_cast<int>(rho.size()); }
  double rho_at(int q) const { return rho.at(static_cast<std::size_t>(q - 1)); }
  double alpha_at(int q) const { return alpha.at(static_cast<std::size_t>(q - 1)); }
  double beta_at(int q) const { return beta.at(static_cast<std::size_t>(q - 1)); }
  double eta_at(int q) const { return eta.at(static_cast<std::size_t>(q - 1)); }
  void validate() const;
};

/// Power split and target rates. Per-hop vectors are indexed t-1; device
/// vectors k-1, k = 1 being the innermost annulus.
struct AllocationPlan {
  double p_message = 0.8;
  std::vector<std::vector<double>> p_device;
  double rate_message = 0.0;
  std::vector<std::vector<double>> rate_device;

  double prefix(int t, int n) const;  // Σ_{q<n} p_{t,q}
  void validate(const Topology& topo, Pairing pairing) const;
};

/// Target-rate rule: a fraction of the maximum reachable rate, capped.
struct RatePolicy {
  double fraction = 0.5;
  double cap = 0.75;
};

enum class EmptyAnnulus { resample, skip };

/// Fitted Singh-Maddala law for the nearest-device gain.
struct FittedGainDistribution {
  double mu = 0.0;
  double theta = 0.0;
  double m = 0.0;
  double fit_error = 0.0;

  double cdf(double phi) const;
  double ccdf(double phi) const;
};

struct Scenario {
  std::string scheme = "TCoM";
  Topology topology;
  LinkBudget budget;
  EhPolicy policy;
  Pairing pairing = Pairing::com;
  AllocationPlan plan;
  EmptyAnnulus empty_annulus = EmptyAnnulus::resample;
  /// Per-hop nearest-gain fits; filled for QoM pairings.
  std::vector<FittedGainDistribution> fits;

  int nodes() const { return topology.nodes(); }
  int hops() const { return topology.nodes() - 1; }
  /// Whether D_t superposes Type-II signals at all.
  bool noma_capable(int t) const;
  /// Number of Type-II signals sent in slot t (K_t for CoM, 1 for QoM).
  int devices(int t) const;
  void validate() const;
};

}  // namespace mmtc
