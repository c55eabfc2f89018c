#include "mmtc/power.hpp"

#include <stdexcept>

#include "mmtc/channel.hpp"
#include "mmtc/geometry.hpp"

namespace mmtc::power {

double omega(const EhPolicy& policy, int q) {
  const int M = policy.nodes();
  if (q < 1 || q > M) throw std::out_of_range("omega: node index");
  if (policy.arch == Architecture::bteh) {
    const double a = policy.alpha_at(q);
    return (M - 1) * a * policy.eta_at(q) / (1.0 - a);
  }
  return policy.beta_at(q) * policy.eta_at(q);
}

double rho(const EhPolicy& policy, int q, int i) {
  const double r = policy.rho_at(q);
  return i == 1 ? r : 1.0 - r;
}

double iota(const Scenario& s, int t, int j) {
  if (!s.noma_capable(t)) return j == 0 ? 1.0 : 0.0;
  const auto& h = s.topology.hop(t);
  const double empty = geometry::null_probability(h.lambda_active, h.radius);
  return j == 0 ? empty : -std::expm1(geometry::log_null_probability(h.lambda_active, h.radius));
}

std::vector<double> transmit_powers(const std::vector<int>& eh, const std::vector<double>& gains,
                                    const EhPolicy& policy, double p0) {
  const int M = policy.nodes();
  if (static_cast<int>(eh.size()) != M || static_cast<int>(gains.size()) != M - 1)
    throw std::invalid_argument("transmit_powers: size mismatch");
  std::vector<double> P(M - 1);
  P[0] = p0;
  for (int t = 2; t <= M - 1; ++t)
    P[t - 1] = eh[t - 1] ? omega(policy, t) * gains[t - 2] * P[t - 2] : p0;
  return P;
}

double transmit_power_closed(int t, const std::vector<int>& eh, const std::vector<double>& gains,
                             const EhPolicy& policy, double p0) {
  int tau = t;
  while (tau > 1 && eh[tau - 1]) --tau;
  double P = p0;
  for (int i = tau + 1; i <= t; ++i) P *= omega(policy, i) * gains[i - 2];
  return P;
}

std::vector<ChainBranch> chain_branches(const Scenario& s, int t) {
  const auto& pol = s.policy;
  std::vector<ChainBranch> out;
  out.push_back({t, rho(pol, t, 0), 0, 1.0});
  for (int tau = t - 1; tau >= 1; --tau) {
    double w = rho(pol, tau, 0);
    double xi = 1.0;
    for (int j = tau + 1; j <= t; ++j) {
      w *= rho(pol, j, 1);
      xi *= omega(pol, j) * channel::path_loss(s.topology.hop(j - 1).distance, s.budget);
    }
    out.push_back({tau, w, t - tau, xi});
  }
  return out;
}

double total_fixed_power(const Scenario& s) {
  double n = 0.0;
  for (int j = 1; j <= s.nodes() - 1; ++j) n += rho(s.policy, j, 0);
  return n * s.budget.p0_watt();
}

}  // namespace mmtc::power
