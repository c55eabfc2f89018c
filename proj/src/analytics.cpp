#include "mmtc/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "mmtc/channel.hpp"
#include "mmtc/errors.hpp"
#include "mmtc/power.hpp"

namespace mmtc::analytics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Threshold for rate R in a slot of relative length tf.
double base_threshold(double rate, int nodes, double tf) { return std::exp2((nodes - 1) * rate / tf) - 1.0; }

// s_M decoded while Type-II signals (1 - p_M of the power) interfere.
double noma_threshold(double tau, double p_message) {
  const double den = 1.0 - (tau + 1.0) * (1.0 - p_message);
  return den > 0.0 ? tau / den : kInf;
}

// The leading term leaves [0, 1] once its argument is no longer small.
double branch_asymptote(double x, int length) {
  return std::clamp(specfun::residue_asymptote(x, length), 0.0, 1.0);
}

}  // namespace

double mrtr_message(Architecture arch, double alpha, int nodes, double p_message) {
  if (p_message >= 1.0) return kNaN;
  const double full = std::log2(1.0 / (1.0 - p_message)) / (nodes - 1);
  return arch == Architecture::bteh ? (1.0 - alpha) * full : full;
}

double mrtr_device(Architecture arch, double alpha, int nodes, double p_device, double prefix) {
  if (!(prefix > 0.0)) return kNaN;
  const double full = std::log2(1.0 + p_device / prefix) / (nodes - 1);
  return arch == Architecture::bteh ? (1.0 - alpha) * full : full;
}

double target_rate(double mrtr, const RatePolicy& policy) {
  if (std::isnan(mrtr)) return policy.cap;
  return std::min(policy.fraction * mrtr, policy.cap);
}

AllocationPlan default_plan(const Topology& topo, Pairing pairing, Architecture rate_arch, double alpha,
                            double p_message, const RatePolicy& policy) {
  const int M = topo.nodes();
  AllocationPlan plan;
  plan.p_message = p_message;
  plan.rate_message = target_rate(mrtr_message(rate_arch, alpha, M, p_message), policy);
  for (const auto& h : topo.hops) {
    std::vector<double> p, r;
    if (h.users > 0 && pairing == Pairing::com) {
      const double denom = std::exp2(h.users) - 1.0;
      double prefix = 0.0;
      for (int k = 1; k <= h.users; ++k) {
        const double pk = (1.0 - p_message) * std::exp2(k - 1) / denom;
        p.push_back(pk);
        r.push_back(target_rate(mrtr_device(rate_arch, alpha, M, pk, prefix), policy));
        prefix += pk;
      }
    } else if (h.users > 0) {
      p.push_back(1.0 - p_message);
      r.push_back(policy.cap);
    }
    plan.p_device.push_back(p);
    plan.rate_device.push_back(r);
  }
  return plan;
}

ThresholdGrid type1_thresholds(const Scenario& s, int t) {
  const int M = s.nodes();
  const int q = t + 1;
  const double R = s.plan.rate_message;
  const double pM = s.plan.p_message;
  ThresholdGrid g{};
  g[0][0] = base_threshold(R, M, 1.0);
  g[0][1] = noma_threshold(g[0][0], pM);
  if (s.policy.arch == Architecture::bteh) {
    g[1][0] = base_threshold(R, M, 1.0 - s.policy.alpha_at(q));
    g[1][1] = noma_threshold(g[1][0], pM);
  } else {
    // Power splitting scales the received SNR by 1 - β; the slot is not shortened.
    const double keep = 1.0 - s.policy.beta_at(q);
    g[1][0] = g[0][0] / keep;
    g[1][1] = g[0][1] / keep;
  }
  return g;
}

std::array<double, 2> type2_thresholds(const Scenario& s, int t, int k) {
  const int M = s.nodes();
  const int q = t + 1;
  const double pM = s.plan.p_message;
  const auto& p = s.plan.p_device.at(t - 1);
  const auto& R = s.plan.rate_device.at(t - 1);
  if (k < 1 || k > static_cast<int>(p.size())) throw std::out_of_range("type2_thresholds: device index");
  std::array<double, 2> out{};
  for (int i = 0; i < 2; ++i) {
    const double tf = (s.policy.arch == Architecture::bteh && i == 1) ? 1.0 - s.policy.alpha_at(q) : 1.0;
    double thr = noma_threshold(base_threshold(s.plan.rate_message, M, tf), pM);
    if (s.pairing == Pairing::com) {
      for (int n = k; n <= static_cast<int>(p.size()); ++n) {
        const double tau = base_threshold(R[n - 1], M, tf);
        const double den = p[n - 1] - tau * s.plan.prefix(t, n);
        thr = std::max(thr, den > 0.0 ? tau / den : kInf);
      }
    } else {
      thr = std::max(thr, base_threshold(R[0], M, tf) / (1.0 - pM));
    }
    out[i] = thr;
  }
  return out;
}

specfun::Tails tails_x(const Scenario& s, int t, double x) {
  const double mean = s.budget.snr0() * channel::path_loss(s.topology.hop(t).distance, s.budget);
  specfun::Tails acc{0.0, 0.0};
  for (const auto& b : power::chain_branches(s, t)) {
    if (b.weight == 0.0) continue;
    const auto tl = specfun::prod_exp_tails(x, b.length + 1, mean * b.mean_gain);
    acc.lower += b.weight * tl.lower;
    acc.upper += b.weight * tl.upper;
  }
  return acc;
}

specfun::Tails tails_y(const Scenario& s, int t, int k, double y) {
  const auto& h = s.topology.hop(t);
  const double g0 = s.budget.snr0();
  const double ell_r = channel::path_loss(h.radius, s.budget);
  specfun::Tails acc{0.0, 0.0};
  for (const auto& b : power::chain_branches(s, t)) {
    if (b.weight == 0.0) continue;
    const auto tl = b.length == 0
                        ? channel::annulus_gain_tails(y / g0, h.radius, h.users, k, s.budget)
                        : specfun::annulus_chain_tails(y / (g0 * ell_r * b.mean_gain), b.length, s.budget.exponent,
                                                       h.users, k);
    acc.lower += b.weight * tl.lower;
    acc.upper += b.weight * tl.upper;
  }
  return acc;
}

specfun::Tails tails_z(const Scenario& s, int t, double z) {
  const auto& fit = s.fits.at(t - 1);
  const double g0 = s.budget.snr0();
  specfun::Tails acc{0.0, 0.0};
  for (const auto& b : power::chain_branches(s, t)) {
    if (b.weight == 0.0) continue;
    const auto tl = specfun::singh_maddala_chain_tails(z / (g0 * b.mean_gain), b.length, fit.mu, fit.theta, fit.m);
    acc.lower += b.weight * tl.lower;
    acc.upper += b.weight * tl.upper;
  }
  return acc;
}

namespace {

using LowerFn = std::function<double(double)>;

double type1_from(const Scenario& s, int t, const LowerFn& lower) {
  const auto g = type1_thresholds(s, t);
  double op = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double w = power::rho(s.policy, t + 1, i) * power::iota(s, t, j);
      if (w == 0.0) continue;
      op += w * (std::isinf(g[i][j]) ? 1.0 : lower(g[i][j]));
    }
  return clamp_probability(op, "Type-I outage");
}

double type2_from(const Scenario& s, int t, int k, const LowerFn& lower) {
  const auto thr = type2_thresholds(s, t, k);
  double op = 0.0;
  if (s.policy.arch == Architecture::bpeh) {
    op = std::isinf(thr[0]) ? 1.0 : lower(thr[0]);
  } else {
    for (int i = 0; i < 2; ++i) {
      const double w = power::rho(s.policy, t + 1, i);
      if (w == 0.0) continue;
      op += w * (std::isinf(thr[i]) ? 1.0 : lower(thr[i]));
    }
  }
  return clamp_probability(op, "Type-II outage");
}

Report assemble(const Scenario& s, const std::function<double(int)>& hop_op,
                const std::function<double(int, int)>& dev_op) {
  Report r;
  const int H = s.hops();
  // log P[s_M reaches D_t] under the product rule; 1 - e^{...} via expm1 keeps
  // outages far below 1e-16 resolved.
  double log_reach = 0.0;
  for (int t = 1; t <= H; ++t) {
    r.hop.push_back(hop_op(t));
    std::vector<double> dev, dev_e2e;
    for (int k = 1; k <= s.devices(t); ++k) {
      const double op = dev_op(t, k);
      dev.push_back(op);
      dev_e2e.push_back(clamp_probability(-std::expm1(std::log1p(-op) + log_reach), "Type-II e2e outage"));
    }
    r.device.push_back(dev);
    r.device_e2e.push_back(dev_e2e);
    log_reach += std::log1p(-r.hop.back());
  }
  r.e2e_type1 = clamp_probability(-std::expm1(log_reach), "Type-I e2e outage");
  r.throughput = sum_throughput(r, s);
  return r;
}

}  // namespace

double op_type1(const Scenario& s, int t) {
  return type1_from(s, t, [&](double x) { return tails_x(s, t, x).lower; });
}

double op_type2(const Scenario& s, int t, int k) {
  if (s.pairing == Pairing::com) return type2_from(s, t, k, [&](double y) { return tails_y(s, t, k, y).lower; });
  return type2_from(s, t, k, [&](double z) { return tails_z(s, t, z).lower; });
}

Report evaluate(const Scenario& s) {
  s.validate();
  return assemble(s, [&](int t) { return op_type1(s, t); }, [&](int t, int k) { return op_type2(s, t, k); });
}

double asymptotic_cdf_x(const Scenario& s, int t, double x) {
  const double mean = s.budget.snr0() * channel::path_loss(s.topology.hop(t).distance, s.budget);
  double acc = 0.0;
  for (const auto& b : power::chain_branches(s, t)) {
    if (b.weight == 0.0) continue;
    acc += b.weight * branch_asymptote(x / (mean * b.mean_gain), b.length);
  }
  return acc;
}

namespace {

// The device gain enters like an exponential whose mean matches its
// small-argument slope.
double asymptotic_device_cdf(const Scenario& s, int t, double v, double slope) {
  const auto& h = s.topology.hop(t);
  const double mean = s.budget.snr0() * channel::path_loss(h.radius, s.budget) / slope;
  double acc = 0.0;
  for (const auto& b : power::chain_branches(s, t)) {
    if (b.weight == 0.0) continue;
    acc += b.weight * branch_asymptote(v / (mean * b.mean_gain), b.length);
  }
  return acc;
}

}  // namespace

double asymptotic_cdf_y(const Scenario& s, int t, int k, double y) {
  const auto& h = s.topology.hop(t);
  return asymptotic_device_cdf(s, t, y, channel::annulus_slope(h.users, k, s.budget.exponent));
}

double asymptotic_cdf_z(const Scenario& s, int t, double z) {
  const auto& h = s.topology.hop(t);
  return asymptotic_device_cdf(s, t, z, channel::nearest_slope(h.lambda_active, h.radius, s.budget.exponent));
}

Report evaluate_asymptotic(const Scenario& s) {
  s.validate();
  return assemble(
      s, [&](int t) { return type1_from(s, t, [&](double x) { return asymptotic_cdf_x(s, t, x); }); },
      [&](int t, int k) {
        if (s.pairing == Pairing::com)
          return type2_from(s, t, k, [&](double y) { return asymptotic_cdf_y(s, t, k, y); });
        return type2_from(s, t, k, [&](double z) { return asymptotic_cdf_z(s, t, z); });
      });
}

double sum_throughput(const Report& r, const Scenario& s) {
  const double slots = s.nodes() - 1;
  double T = s.plan.rate_message / slots * (1.0 - r.e2e_type1);
  for (int t = 1; t <= s.hops(); ++t)
    for (int k = 1; k <= s.devices(t); ++k)
      T += s.plan.rate_device[t - 1][k - 1] / slots * (1.0 - r.device_e2e[t - 1][k - 1]);
  return T;
}

double energy_efficiency(const Scenario& s, double throughput) {
  return s.budget.bandwidth_hz * throughput / power::total_fixed_power(s);
}

DiversityFit diversity_order_estimate(const std::vector<double>& snr_db, const std::vector<double>& op,
                                      double window_db) {
  if (snr_db.size() != op.size() || snr_db.empty()) throw std::invalid_argument("diversity: curve size mismatch");
  const double top = *std::max_element(snr_db.begin(), snr_db.end());
  std::vector<double> xs, ys;
  int excluded = 0;
  for (std::size_t i = 0; i < op.size(); ++i) {
    if (snr_db[i] < top - window_db - 1e-9) continue;
    if (!std::isfinite(op[i]) || !(op[i] > 1e-300) || !(op[i] < 1.0)) {
      ++excluded;
      continue;
    }
    xs.push_back(snr_db[i] / 10.0);
    ys.push_back(std::log10(op[i]));
  }
  if (xs.size() < 2) throw NumericError("diversity: fewer than two usable points in the window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return {-sxy / sxx, static_cast<int>(xs.size()), excluded};
}

}  // namespace mmtc::analytics
