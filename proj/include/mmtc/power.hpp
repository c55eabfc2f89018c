#pragma once

#include <vector>

#include "mmtc/scenario.hpp"

namespace mmtc::power {

/// Ω_q: (M-1) α η / (1-α) under BTEH, β η under BPEH.
double omega(const EhPolicy& policy, int q);

/// ρ^{[i]}_q: probability that node q is (i = 1) or is not (i = 0) harvesting.
double rho(const EhPolicy& policy, int q, int i);

/// ι^{[j]}_t: probability that disk t is empty (j = 0) or holds at least one
/// active device (j = 1), so that D_t superposes Type-II signals.
double iota(const Scenario& s, int t, int j);

/// Transmit power of D_t from EH indicators I_1..I_M and hop gains
/// φ_2..φ_M (gains[i-2] is the gain of the hop into node i), by recursion.
std::vector<double> transmit_powers(const std::vector<int>& eh, const std::vector<double>& gains,
                                    const EhPolicy& policy, double p0);

/// The same power from the closed form P0 ∏_{i=τ+1}^{t} Ω_i φ_i, with τ the
/// last node at or before t that did not harvest.
double transmit_power_closed(int t, const std::vector<int>& eh, const std::vector<double>& gains,
                             const EhPolicy& policy, double p0);

/// One term of the harvesting-chain mixture for D_t's power: the chain started
/// after node tau (tau < t) or D_t uses fixed power (tau == t).
struct ChainBranch {
  int tau;
  double weight;     // ρ0_τ ∏_{j=τ+1}^{t} ρ_j, or ρ0_t for tau == t
  int length;        // t - tau exponential factors in the chain
  double mean_gain;  // ξ̄_{τ+1,t} = ∏ Ω_i ℓ(l_i), 1 for tau == t
};
std::vector<ChainBranch> chain_branches(const Scenario& s, int t);

/// Fixed-power budget Σ_{j=1}^{M-1} ρ0_j P0 in watts.
double total_fixed_power(const Scenario& s);

}  // namespace mmtc::power
