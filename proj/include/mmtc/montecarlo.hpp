#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mmtc/scenario.hpp"

namespace mmtc::montecarlo {

/// One D_1 -> D_M block. Hop vectors are indexed t-1, device vectors [t-1][k-1].
struct TrialOutcome {
  std::vector<int> eh;             // I_1..I_M
  std::vector<double> power;       // P_1..P_{M-1} [W]
  std::vector<char> noma;          // D_t superposes Type-II signals
  std::vector<double> snr;         // P_t φ_t / σ² (before any power split)
  std::vector<double> rate;        // achieved rate of s_M at D_{t+1}
  std::vector<char> hop_ok;        // s_M decoded at D_{t+1}
  std::vector<std::vector<double>> device_snr;  // P_t φ / σ² at the Type-II device
  std::vector<std::vector<double>> device_rate;  // achieved rate of its own signal
  std::vector<std::vector<char>> device_present;
  std::vector<std::vector<char>> device_ok;  // SIC chain and own signal decoded
  int fixed_transmissions = 0;               // relays that spent P0
};

/// Draws one block. Streams are keyed by (seed, trial), so the outcome does
/// not depend on which thread runs it.
TrialOutcome run_block_trial(const Scenario& s, std::uint64_t seed, std::uint64_t trial);

struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal interval
  long trials = 0;
};

/// Binomial estimate; throws std::invalid_argument for trials == 0.
Estimate binomial(long failures, long trials);

/// Integer tallies over a batch of trials; merging is exact.
struct Tally {
  long trials = 0;
  long e2e_fail = 0;
  long fixed_transmissions = 0;
  std::vector<long> hop_fail;
  std::vector<std::vector<long>> present, device_fail, device_e2e_fail;

  explicit Tally(const Scenario& s);
  void add(const TrialOutcome& o);
  void merge(const Tally& other);
};

/// Trials [first, first + count) of the seed, split over `threads` workers
/// (0 = hardware concurrency).
Tally run_trials(const Scenario& s, long count, std::uint64_t seed, int threads = 1, long first = 0);

struct McReport {
  std::vector<Estimate> hop;
  std::vector<std::vector<Estimate>> device;      // given the device exists
  std::vector<std::vector<Estimate>> device_e2e;  // given the device exists
  Estimate e2e_type1;
  Estimate throughput;
  Estimate fixed_power;  // mean fixed power per block [W]
};

McReport summarize(const Scenario& s, const Tally& tally);
McReport simulate(const Scenario& s, long trials, std::uint64_t seed, int threads = 1);

enum class Target { hop, device, device_e2e, e2e_type1 };
struct NodeSelector {
  Target target = Target::e2e_type1;
  int t = 0;
  int k = 0;
};

Estimate estimate_outage(const Scenario& s, const NodeSelector& node, long trials, std::uint64_t seed,
                         int threads = 1);
Estimate estimate_throughput(const Scenario& s, long trials, std::uint64_t seed, int threads = 1);

/// Empirical CCDF of X (hop t), Y (CoM device k of slot t) or Z (QoM device
/// of slot t) on a grid, with binomial intervals.
enum class Variable { x, y, z };
std::vector<Estimate> empirical_ccdf_oracle(const Scenario& s, Variable v, int t, int k,
                                            const std::vector<double>& grid, long trials, std::uint64_t seed);

/// One CSV row per trial with powers, SNRs and decode bits.
void dump_trials(std::ostream& os, const Scenario& s, long trials, std::uint64_t seed);

}  // namespace mmtc::montecarlo
