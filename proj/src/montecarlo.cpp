#include "mmtc/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mmtc/channel.hpp"
#include "mmtc/geometry.hpp"
#include "mmtc/power.hpp"
#include "mmtc/random.hpp"

namespace mmtc::montecarlo {

namespace {

// Stream tags inside one trial.
enum Stream : std::uint64_t { kEh = 1, kHop = 2, kDisk = 3 };

double sinr_message(double y, double p_message) { return p_message * y / ((1.0 - p_message) * y + 1.0); }

}  // namespace

TrialOutcome run_block_trial(const Scenario& s, std::uint64_t seed, std::uint64_t trial) {
  const int M = s.nodes();
  const int H = s.hops();
  const auto& pol = s.policy;
  const auto& plan = s.plan;
  const double noise = s.budget.noise_watt();
  const double p0 = s.budget.p0_watt();
  const double slots = M - 1;

  TrialOutcome o;
  o.eh.assign(M, 0);
  CounterRng eh_rng(seed, {trial, kEh});
  for (int q = 2; q <= M - 1; ++q) o.eh[q - 1] = eh_rng.bernoulli(pol.rho_at(q)) ? 1 : 0;

  std::vector<double> gains(H);
  for (int t = 1; t <= H; ++t) {
    CounterRng rng(seed, {trial, kHop, static_cast<std::uint64_t>(t)});
    gains[t - 1] = channel::path_loss(s.topology.hop(t).distance, s.budget) * rng.exponential();
  }
  o.power = power::transmit_powers(o.eh, gains, pol, p0);
  for (int t = 1; t <= H; ++t) o.fixed_transmissions += o.eh[t - 1] ? 0 : 1;

  o.noma.assign(H, 0);
  o.snr.assign(H, 0.0);
  o.rate.assign(H, 0.0);
  o.hop_ok.assign(H, 0);
  o.device_snr.resize(H);
  o.device_rate.resize(H);
  o.device_present.resize(H);
  o.device_ok.resize(H);

  for (int t = 1; t <= H; ++t) {
    const auto& h = s.topology.hop(t);
    const int q = t + 1;
    const bool harvest = o.eh[q - 1] == 1;
    double tf = 1.0;   // share of the slot left for decoding
    double keep = 1.0;  // share of the received power left for decoding
    if (harvest && pol.arch == Architecture::bteh) tf = 1.0 - pol.alpha_at(q);
    if (harvest && pol.arch == Architecture::bpeh) keep = 1.0 - pol.beta_at(q);

    CounterRng disk(seed, {trial, kDisk, static_cast<std::uint64_t>(t)});
    bool noma = false;
    if (s.noma_capable(t)) noma = disk.bernoulli(-std::expm1(geometry::log_null_probability(h.lambda_active, h.radius)));
    o.noma[t - 1] = noma ? 1 : 0;

    const double x = o.power[t - 1] * gains[t - 1] / noise;
    o.snr[t - 1] = x;
    const double xd = keep * x;
    const double sinr = noma ? sinr_message(xd, plan.p_message) : xd;
    o.rate[t - 1] = tf / slots * std::log2(1.0 + sinr);
    o.hop_ok[t - 1] = o.rate[t - 1] >= plan.rate_message ? 1 : 0;

    // Type-II devices of slot t. Gains are drawn even when the disk is empty
    // so that the CCDF oracle sees the unconditional law.
    const int n_dev = s.devices(t);
    auto& ysnr = o.device_snr[t - 1];
    auto& yrate = o.device_rate[t - 1];
    auto& present = o.device_present[t - 1];
    auto& ok = o.device_ok[t - 1];
    ysnr.assign(n_dev, 0.0);
    yrate.assign(n_dev, 0.0);
    present.assign(n_dev, 0);
    ok.assign(n_dev, 0);
    for (int k = 1; k <= n_dev; ++k) {
      double d;
      bool here = noma;
      if (s.pairing == Pairing::com) {
        d = geometry::sample_annulus_distance(h.radius, h.users, k, disk);
        if (s.empty_annulus == EmptyAnnulus::skip) {
          const auto a = geometry::annulus(h.radius, h.users, k, h.lambda_active);
          const double area = std::acos(-1.0) * (a.outer * a.outer - a.inner * a.inner);
          here = here && disk.bernoulli(-std::expm1(-a.density * area));
        }
      } else {
        d = geometry::sample_nearest_distance(h.lambda_active, h.radius, disk);
      }
      const double y = o.power[t - 1] * channel::path_loss(d, s.budget) * disk.exponential() / noise;
      ysnr[k - 1] = y;
      present[k - 1] = here ? 1 : 0;

      bool good = tf / slots * std::log2(1.0 + sinr_message(y, plan.p_message)) >= plan.rate_message;
      if (s.pairing == Pairing::com) {
        // SIC from the strongest device signal (n = K_t) down to k.
        for (int n = h.users; n >= k && good; --n) {
          const double pn = plan.p_device[t - 1][n - 1];
          const double r = tf / slots * std::log2(1.0 + pn * y / (plan.prefix(t, n) * y + 1.0));
          if (n == k) yrate[k - 1] = r;
          good = r >= plan.rate_device[t - 1][n - 1];
        }
      } else {
        const double r = tf / slots * std::log2(1.0 + (1.0 - plan.p_message) * y);
        yrate[k - 1] = r;
        good = good && r >= plan.rate_device[t - 1][0];
      }
      ok[k - 1] = here && good ? 1 : 0;
    }
  }
  return o;
}

Estimate binomial(long failures, long trials) {
  if (trials <= 0) throw std::invalid_argument("estimate needs at least one trial");
  const double p = static_cast<double>(failures) / trials;
  return {p, 1.96 * std::sqrt(p * (1.0 - p) / trials), trials};
}

Tally::Tally(const Scenario& s) : hop_fail(s.hops(), 0) {
  for (int t = 1; t <= s.hops(); ++t) {
    present.emplace_back(s.devices(t), 0);
    device_fail.emplace_back(s.devices(t), 0);
    device_e2e_fail.emplace_back(s.devices(t), 0);
  }
}

void Tally::add(const TrialOutcome& o) {
  ++trials;
  fixed_transmissions += o.fixed_transmissions;
  bool reach = true;  // s_M decoded on hops 1..t-1
  for (std::size_t t = 0; t < hop_fail.size(); ++t) {
    for (std::size_t k = 0; k < present[t].size(); ++k) {
      if (!o.device_present[t][k]) continue;
      ++present[t][k];
      if (!o.device_ok[t][k]) ++device_fail[t][k];
      const bool e2e_ok = reach && o.device_ok[t][k];
      if (!e2e_ok) ++device_e2e_fail[t][k];
    }
    if (!o.hop_ok[t]) {
      ++hop_fail[t];
      reach = false;
    }
  }
  if (!reach) ++e2e_fail;
}

void Tally::merge(const Tally& other) {
  trials += other.trials;
  e2e_fail += other.e2e_fail;
  fixed_transmissions += other.fixed_transmissions;
  for (std::size_t t = 0; t < hop_fail.size(); ++t) {
    hop_fail[t] += other.hop_fail[t];
    for (std::size_t k = 0; k < present[t].size(); ++k) {
      present[t][k] += other.present[t][k];
      device_fail[t][k] += other.device_fail[t][k];
      device_e2e_fail[t][k] += other.device_e2e_fail[t][k];
    }
  }
}

Tally run_trials(const Scenario& s, long count, std::uint64_t seed, int threads, long first) {
  s.validate();
  if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<int>(std::min<long>(threads, std::max(1L, count)));
  std::vector<Tally> parts(threads, Tally(s));
  auto work = [&](int w) {
    const long lo = first + count * w / threads;
    const long hi = first + count * (w + 1) / threads;
    for (long i = lo; i < hi; ++i) parts[w].add(run_block_trial(s, seed, static_cast<std::uint64_t>(i)));
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  Tally total(s);
  for (const auto& p : parts) total.merge(p);
  return total;
}

McReport summarize(const Scenario& s, const Tally& tally) {
  McReport r;
  const double slots = s.nodes() - 1;
  for (std::size_t t = 0; t < tally.hop_fail.size(); ++t) {
    r.hop.push_back(binomial(tally.hop_fail[t], tally.trials));
    std::vector<Estimate> dev, dev_e2e;
    for (std::size_t k = 0; k < tally.present[t].size(); ++k) {
      const long n = tally.present[t][k];
      if (n == 0) {
        dev.push_back({std::nan(""), std::nan(""), 0});
        dev_e2e.push_back({std::nan(""), std::nan(""), 0});
        continue;
      }
      dev.push_back(binomial(tally.device_fail[t][k], n));
      dev_e2e.push_back(binomial(tally.device_e2e_fail[t][k], n));
    }
    r.device.push_back(dev);
    r.device_e2e.push_back(dev_e2e);
  }
  r.e2e_type1 = binomial(tally.e2e_fail, tally.trials);

  // Sum throughput from the estimated e2e outages; the interval combines the
  // terms as if independent.
  double mean = s.plan.rate_message / slots * (1.0 - r.e2e_type1.mean);
  double var = std::pow(s.plan.rate_message / slots * r.e2e_type1.half_width, 2);
  for (std::size_t t = 0; t < r.device_e2e.size(); ++t)
    for (std::size_t k = 0; k < r.device_e2e[t].size(); ++k) {
      const auto& e = r.device_e2e[t][k];
      if (e.trials == 0) continue;
      const double c = s.plan.rate_device[t][k] / slots;
      mean += c * (1.0 - e.mean);
      var += std::pow(c * e.half_width, 2);
    }
  r.throughput = {mean, std::sqrt(var), tally.trials};

  const double p0 = s.budget.p0_watt();
  const double fixed = static_cast<double>(tally.fixed_transmissions) / tally.trials;
  // Each relay slot is a Bernoulli draw, so the per-block count has variance
  // Σ ρ(1-ρ) over relays.
  double v = 0.0;
  for (int j = 2; j <= s.nodes() - 1; ++j) v += s.policy.rho_at(j) * (1.0 - s.policy.rho_at(j));
  r.fixed_power = {fixed * p0, 1.96 * p0 * std::sqrt(v / tally.trials), tally.trials};
  return r;
}

McReport simulate(const Scenario& s, long trials, std::uint64_t seed, int threads) {
  if (trials <= 0) throw std::invalid_argument("simulate: trials must be positive");
  return summarize(s, run_trials(s, trials, seed, threads));
}

Estimate estimate_outage(const Scenario& s, const NodeSelector& node, long trials, std::uint64_t seed,
                         int threads) {
  const auto r = simulate(s, trials, seed, threads);
  switch (node.target) {
    case Target::hop:
      return r.hop.at(node.t - 1);
    case Target::device:
      return r.device.at(node.t - 1).at(node.k - 1);
    case Target::device_e2e:
      return r.device_e2e.at(node.t - 1).at(node.k - 1);
    case Target::e2e_type1:
      break;
  }
  return r.e2e_type1;
}

Estimate estimate_throughput(const Scenario& s, long trials, std::uint64_t seed, int threads) {
  return simulate(s, trials, seed, threads).throughput;
}

std::vector<Estimate> empirical_ccdf_oracle(const Scenario& s, Variable v, int t, int k,
                                            const std::vector<double>& grid, long trials, std::uint64_t seed) {
  if (trials <= 0) throw std::invalid_argument("ccdf oracle: trials must be positive");
  if (v == Variable::y && s.pairing != Pairing::com) throw std::invalid_argument("ccdf oracle: Y needs CoM pairing");
  if (v == Variable::z && s.pairing != Pairing::qom) throw std::invalid_argument("ccdf oracle: Z needs QoM pairing");
  if (v != Variable::x && (k < 1 || k > s.devices(t))) throw std::out_of_range("ccdf oracle: device index");
  std::vector<double> draws;
  draws.reserve(trials);
  for (long i = 0; i < trials; ++i) {
    const auto o = run_block_trial(s, seed, static_cast<std::uint64_t>(i));
    draws.push_back(v == Variable::x ? o.snr.at(t - 1) : o.device_snr.at(t - 1).at(k - 1));
  }
  std::sort(draws.begin(), draws.end());
  std::vector<Estimate> out;
  for (double g : grid) {
    const long below = std::lower_bound(draws.begin(), draws.end(), g) - draws.begin();
    out.push_back(binomial(trials - below, trials));  // P[W >= g]
  }
  return out;
}

void dump_trials(std::ostream& os, const Scenario& s, long trials, std::uint64_t seed) {
  const int H = s.hops();
  os << "trial";
  for (int t = 1; t <= H; ++t) os << ",eh" << t << ",power" << t << ",noma" << t << ",snr" << t << ",hop_ok" << t;
  for (int t = 1; t <= H; ++t)
    for (int k = 1; k <= s.devices(t); ++k) os << ",dev" << t << '_' << k << "_snr,dev" << t << '_' << k << "_ok";
  os << '\n';
  os.precision(17);
  for (long i = 0; i < trials; ++i) {
    const auto o = run_block_trial(s, seed, static_cast<std::uint64_t>(i));
    os << i;
    for (int t = 1; t <= H; ++t)
      os << ',' << o.eh[t - 1] << ',' << o.power[t - 1] << ',' << int(o.noma[t - 1]) << ',' << o.snr[t - 1] << ','
         << int(o.hop_ok[t - 1]);
    for (int t = 1; t <= H; ++t)
      for (std::size_t k = 0; k < o.device_snr[t - 1].size(); ++k)
        os << ',' << o.device_snr[t - 1][k] << ',' << int(o.device_ok[t - 1][k]);
    os << '\n';
  }
}

}  // namespace mmtc::montecarlo
