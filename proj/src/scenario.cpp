#include "mmtc/scenario.hpp"

#include <cmath>
#include <string>

#include "mmtc/errors.hpp"

namespace mmtc {

double LinkBudget::p0_watt() const { return std::pow(10.0, (p0_dbm - 30.0) / 10.0); }
double LinkBudget::noise_dbm() const { return noise_dbm_per_hz + 10.0 * std::log10(bandwidth_hz); }
double LinkBudget::noise_watt() const { return std::pow(10.0, (noise_dbm() - 30.0) / 10.0); }
double LinkBudget::snr0() const { return std::pow(10.0, (p0_dbm - noise_dbm()) / 10.0); }

void Topology::validate() const {
  if (hops.empty()) throw ConfigError("topology needs at least one hop");
  for (std::size_t i = 0; i < hops.size(); ++i) {
    const auto& h = hops[i];
    const std::string where = "topology column " + std::to_string(i + 1);
    if (!(h.distance > 0.0)) throw ConfigError(where + ": hop distance must be positive");
    if (!(h.radius > 0.0)) throw ConfigError(where + ": disk radius must be positive");
    if (h.users < 0) throw ConfigError(where + ": negative user count");
    if (!(h.lambda_active >= 0.0) || !(h.lambda_inactive >= 0.0))
      throw ConfigError(where + ": densities must be non-negative");
  }
}

Topology preset_topology(const std::string& name, double lambda_active, double lambda_inactive) {
  struct Rows {
    std::vector<double> l, r;
    std::vector<int> k;
  };
  Rows rows;
  if (name == "T1") {
    rows = {{200, 200, 200}, {100, 100, 100}, {3, 2, 1}};
  } else if (name == "T2") {
    rows = {{200, 100, 100}, {100, 50, 50}, {3, 2, 1}};
  } else if (name == "T3") {
    rows = {{50, 50}, {25, 25}, {2, 2}};
  } else if (name == "T4") {
    rows = {{200, 200, 200}, {100, 100, 100}, {2, 2, 2}};
  } else if (name == "T5") {
    rows = {{200, 200, 200, 200}, {100, 100, 100, 100}, {2, 2, 2, 2}};
  } else {
    throw ConfigError("unknown topology preset: " + name);
  }
  Topology t;
  for (std::size_t i = 0; i < rows.l.size(); ++i)
    t.hops.push_back({rows.l[i], rows.r[i], rows.k[i], lambda_active, lambda_inactive});
  return t;
}

EhPolicy EhPolicy::uniform(int nodes, Architecture arch, double rho, double alpha, double beta, double eta) {
  EhPolicy p;
  p.arch = arch;
  p.rho.assign(nodes, rho);
  p.alpha.assign(nodes, alpha);
  p.beta.assign(nodes, beta);
  p.eta.assign(nodes, eta);
  p.rho.front() = 0.0;
  p.rho.back() = 0.0;
  return p;
}

void EhPolicy::validate() const {
  const auto n = rho.size();
  if (n < 2 || alpha.size() != n || beta.size() != n || eta.size() != n)
    throw ConfigError("EH policy vectors must cover every node");
  if (rho.front() != 0.0 || rho.back() != 0.0) throw ConfigError("source and destination cannot harvest");
  for (std::size_t q = 0; q < n; ++q) {
    if (!(rho[q] >= 0.0 && rho[q] <= 1.0)) throw ConfigError("EH ratio outside [0, 1]");
    if (!(alpha[q] > 0.0 && alpha[q] < 1.0)) throw ConfigError("time-switching ratio outside (0, 1)");
    if (!(beta[q] >= 0.0 && beta[q] < 1.0)) throw ConfigError("power-splitting ratio outside [0, 1)");
    if (!(eta[q] > 0.0 && eta[q] <= 1.0)) throw ConfigError("harvesting efficiency outside (0, 1]");
  }
}

double AllocationPlan::prefix(int t, int n) const {
  const auto& p = p_device.at(static_cast<std::size_t>(t - 1));
  double s = 0.0;
  for (int q = 1; q < n; ++q) s += p.at(static_cast<std::size_t>(q - 1));
  return s;
}

void AllocationPlan::validate(const Topology& topo, Pairing pairing) const {
  if (!(p_message > 0.0 && p_message <= 1.0)) throw ConfigError("message power share outside (0, 1]");
  if (p_device.size() != topo.hops.size() || rate_device.size() != topo.hops.size())
    throw ConfigError("allocation plan must cover every hop");
  if (!(rate_message > 0.0)) throw ConfigError("message target rate must be positive");
  for (int t = 1; t <= static_cast<int>(topo.hops.size()); ++t) {
    const auto& p = p_device[t - 1];
    const std::size_t want = pairing == Pairing::com ? static_cast<std::size_t>(topo.hop(t).users)
                                                     : (topo.hop(t).users > 0 ? 1u : 0u);
    if (p.size() != want || rate_device[t - 1].size() != want)
      throw ConfigError("hop " + std::to_string(t) + ": device allocation does not match the pairing");
    if (want == 0) continue;
    double s = p_message;
    for (double v : p) {
      if (!(v > 0.0)) throw ConfigError("device power share must be positive");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ConfigError("hop " + std::to_string(t) + ": power shares must sum to 1");
    for (double r : rate_device[t - 1])
      if (!(r > 0.0)) throw ConfigError("device target rate must be positive");
  }
}

double FittedGainDistribution::ccdf(double phi) const {
  if (!(phi > 0.0)) return 1.0;
  return std::exp(-m * std::log1p(std::pow(phi / mu, theta)));
}

double FittedGainDistribution::cdf(double phi) const {
  if (!(phi > 0.0)) return 0.0;
  return -std::expm1(-m * std::log1p(std::pow(phi / mu, theta)));
}

bool Scenario::noma_capable(int t) const { return devices(t) > 0 && plan.p_message < 1.0; }

int Scenario::devices(int t) const {
  const int k = topology.hop(t).users;
  if (pairing == Pairing::com) return k;
  return k > 0 ? 1 : 0;
}

void Scenario::validate() const {
  topology.validate();
  policy.validate();
  if (policy.nodes() != nodes()) throw ConfigError("EH policy size does not match the topology");
  plan.validate(topology, pairing);
  if (pairing == Pairing::qom) {
    for (int t = 1; t <= hops(); ++t)
      if (devices(t) > 0 && (fits.size() < static_cast<std::size_t>(hops()) || !(fits[t - 1].mu > 0.0)))
        throw ConfigError("QoM scenario is missing the nearest-gain fit for hop " + std::to_string(t));
  }
  if (!(budget.bandwidth_hz > 0.0) || !(budget.exponent > 2.0) || !(budget.reference_m > 0.0))
    throw ConfigError("link budget needs positive bandwidth, reference distance and exponent > 2");
}

}  // namespace mmtc
