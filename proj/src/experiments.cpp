#include "mmtc/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "mmtc/analytics.hpp"
#include "mmtc/errors.hpp"
#include "mmtc/montecarlo.hpp"
#include "mmtc/power.hpp"

namespace mmtc::experiments {

using nlohmann::json;

namespace {

const std::set<std::string> kSchemes{"TCoM", "TQoM", "PCoM", "PQoM", "CoM", "QoM", "CNRR"};
const std::set<std::string> kVariables{"P0_dBm", "rho", "alpha", "beta", "eta", "lambda", "M", "K", "p_message"};
const std::set<std::string> kOutputs{"op",  "op_e2e", "op_hop",         "op_device", "throughput",
                                     "ee",  "eed",    "max_throughput", "diversity"};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

double number(const json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  return v.get<double>();
}

SweepAxis parse_axis(const json& obj, const std::string& where) {
  check_keys(obj, {"variable", "grid"}, where);
  SweepAxis a;
  if (!obj.contains("variable") || !obj.at("variable").is_string()) throw ConfigError(where + ".variable is required");
  a.variable = obj.at("variable").get<std::string>();
  if (!kVariables.count(a.variable)) throw ConfigError(where + ": unknown sweep variable '" + a.variable + "'");
  if (!obj.contains("grid") || !obj.at("grid").is_array()) throw ConfigError(where + ".grid must be an array");
  for (const auto& v : obj.at("grid")) {
    if (!v.is_number()) throw ConfigError(where + ".grid must hold numbers");
    a.grid.push_back(v.get<double>());
  }
  if (a.grid.empty()) throw ConfigError(where + ".grid is empty");
  for (std::size_t i = 1; i < a.grid.size(); ++i)
    if (!(a.grid[i] > a.grid[i - 1])) throw ConfigError(where + ".grid must be strictly increasing");
  return a;
}

Topology topology_from_rows(const json& obj) {
  check_keys(obj, {"distance", "radius", "users"}, "topology");
  const auto l = obj.at("distance").get<std::vector<double>>();
  const auto r = obj.at("radius").get<std::vector<double>>();
  const auto k = obj.at("users").get<std::vector<int>>();
  if (l.size() != r.size() || l.size() != k.size()) throw ConfigError("topology rows must have equal length");
  Topology t;
  for (std::size_t i = 0; i < l.size(); ++i) t.hops.push_back({l[i], r[i], k[i]});
  t.validate();
  return t;
}

}  // namespace

const char* source_name(Source s) {
  switch (s) {
    case Source::analytic:
      return "analytic";
    case Source::mc:
      return "mc";
    case Source::asymptotic:
      return "asymptotic";
  }
  return "?";
}

Source parse_source(const std::string& name) {
  if (name == "analytic") return Source::analytic;
  if (name == "mc") return Source::mc;
  if (name == "asymptotic") return Source::asymptotic;
  throw ConfigError("unknown source '" + name + "'");
}

namespace {

std::vector<Source> parse_sources(const json& v) {
  std::vector<std::string> names;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "both") {
      names = {"analytic", "mc"};
    } else if (s == "all") {
      names = {"analytic", "mc", "asymptotic"};
    } else {
      names = {s};
    }
  } else if (v.is_array()) {
    names = v.get<std::vector<std::string>>();
  } else {
    throw ConfigError("sweep.source must be a string or an array");
  }
  std::vector<Source> out;
  for (const auto& n : names) out.push_back(parse_source(n));
  if (out.empty()) throw ConfigError("sweep.source is empty");
  return out;
}

}  // namespace

SweepSpec parse_config(const json& doc) {
  check_keys(doc, {"name", "description", "topology", "topology_by_nodes", "density", "budget", "policy", "plan",
                   "empty_annulus", "sweep"},
             "config");
  SweepSpec spec;
  auto& st = spec.base;
  spec.name = doc.value("name", "");
  if (doc.contains("topology")) {
    const auto& t = doc.at("topology");
    if (t.is_string()) {
      st.topology_name = t.get<std::string>();
      st.topology = preset_topology(st.topology_name);
    } else {
      st.topology_name.clear();
      st.topology = topology_from_rows(t);
    }
  }
  if (doc.contains("topology_by_nodes")) {
    const auto& m = doc.at("topology_by_nodes");
    if (!m.is_object()) throw ConfigError("topology_by_nodes must map node counts to presets");
    for (auto it = m.begin(); it != m.end(); ++it) {
      const int nodes = std::stoi(it.key());
      const auto name = it.value().get<std::string>();
      if (preset_topology(name).nodes() != nodes)
        throw ConfigError("topology_by_nodes: " + name + " does not have " + it.key() + " nodes");
      st.topology_by_nodes[nodes] = name;
    }
  }
  if (doc.contains("density")) {
    const auto& d = doc.at("density");
    check_keys(d, {"active", "inactive"}, "density");
    st.lambda_active = number(d, "active", st.lambda_active, "density");
    st.lambda_inactive = number(d, "inactive", st.lambda_inactive, "density");
  }
  if (doc.contains("budget")) {
    const auto& b = doc.at("budget");
    check_keys(b, {"p0_dbm", "noise_dbm_per_hz", "bandwidth_hz", "carrier_ghz", "gain_tx_dbi", "gain_rx_dbi",
                   "reference_m", "exponent"},
               "budget");
    auto& lb = st.budget;
    lb.p0_dbm = number(b, "p0_dbm", lb.p0_dbm, "budget");
    lb.noise_dbm_per_hz = number(b, "noise_dbm_per_hz", lb.noise_dbm_per_hz, "budget");
    lb.bandwidth_hz = number(b, "bandwidth_hz", lb.bandwidth_hz, "budget");
    lb.carrier_ghz = number(b, "carrier_ghz", lb.carrier_ghz, "budget");
    lb.gain_tx_dbi = number(b, "gain_tx_dbi", lb.gain_tx_dbi, "budget");
    lb.gain_rx_dbi = number(b, "gain_rx_dbi", lb.gain_rx_dbi, "budget");
    lb.reference_m = number(b, "reference_m", lb.reference_m, "budget");
    lb.exponent = number(b, "exponent", lb.exponent, "budget");
  }
  if (doc.contains("policy")) {
    const auto& p = doc.at("policy");
    check_keys(p, {"rho", "alpha", "beta", "eta"}, "policy");
    st.rho = number(p, "rho", st.rho, "policy");
    st.alpha = number(p, "alpha", st.alpha, "policy");
    st.beta = number(p, "beta", st.beta, "policy");
    st.eta = number(p, "eta", st.eta, "policy");
  }
  if (doc.contains("plan")) {
    const auto& p = doc.at("plan");
    check_keys(p, {"p_message", "rate_fraction", "rate_cap", "max_users"}, "plan");
    st.p_message = number(p, "p_message", st.p_message, "plan");
    st.rates.fraction = number(p, "rate_fraction", st.rates.fraction, "plan");
    st.rates.cap = number(p, "rate_cap", st.rates.cap, "plan");
    st.max_users = static_cast<int>(number(p, "max_users", st.max_users, "plan"));
    if (st.max_users < 1) throw ConfigError("plan.max_users must be at least 1");
  }
  if (doc.contains("empty_annulus")) {
    const auto e = doc.at("empty_annulus").get<std::string>();
    if (e == "resample") {
      st.empty_annulus = EmptyAnnulus::resample;
    } else if (e == "skip") {
      st.empty_annulus = EmptyAnnulus::skip;
    } else {
      throw ConfigError("empty_annulus must be 'resample' or 'skip'");
    }
  }
  if (!doc.contains("sweep")) throw ConfigError("config needs a sweep section");
  const auto& sw = doc.at("sweep");
  check_keys(sw, {"variable", "grid", "outer", "schemes", "outputs", "source", "trials", "seed", "diversity_window_db"},
             "sweep");
  json axis = json::object();
  if (sw.contains("variable")) axis["variable"] = sw.at("variable");
  if (sw.contains("grid")) axis["grid"] = sw.at("grid");
  spec.axis = parse_axis(axis, "sweep");
  if (sw.contains("outer")) spec.outer = parse_axis(sw.at("outer"), "sweep.outer");
  if (!sw.contains("schemes") || !sw.at("schemes").is_array()) throw ConfigError("sweep.schemes must be an array");
  spec.schemes = sw.at("schemes").get<std::vector<std::string>>();
  if (spec.schemes.empty()) throw ConfigError("sweep.schemes is empty");
  for (const auto& s : spec.schemes)
    if (!kSchemes.count(s)) throw ConfigError("unknown scheme '" + s + "'");
  spec.outputs = sw.value("outputs", std::vector<std::string>{"op", "throughput"});
  if (spec.outputs.empty()) throw ConfigError("sweep.outputs is empty");
  for (const auto& o : spec.outputs)
    if (!kOutputs.count(o)) throw ConfigError("unknown output '" + o + "'");
  if (sw.contains("source")) spec.sources = parse_sources(sw.at("source"));
  spec.trials = static_cast<long>(number(sw, "trials", static_cast<double>(spec.trials), "sweep"));
  if (spec.trials <= 0) throw ConfigError("sweep.trials must be positive");
  spec.seed = sw.value("seed", spec.seed);
  spec.diversity_window_db = number(sw, "diversity_window_db", spec.diversity_window_db, "sweep");
  if (std::count(spec.outputs.begin(), spec.outputs.end(), "diversity") && spec.axis.variable != "P0_dBm")
    throw ConfigError("diversity output needs a P0_dBm sweep");

  // Structural checks at every grid point; fits are built lazily by run_sweep.
  const std::vector<double> outer_grid = spec.outer ? spec.outer->grid : std::vector<double>{0.0};
  for (double ov : outer_grid)
    for (double v : spec.axis.grid) {
      Settings s = st;
      if (spec.outer) apply(s, spec.outer->variable, ov);
      apply(s, spec.axis.variable, v);
      s.topology.validate();
      EhPolicy::uniform(s.topology.nodes(), Architecture::bteh, s.rho, s.alpha, s.beta, s.eta).validate();
      if (!(s.p_message > 0.0 && s.p_message < 1.0)) throw ConfigError("p_message must lie in (0, 1)");
    }
  return spec;
}

SweepSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  try {
    return parse_config(doc);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

bool known_scheme(const std::string& name) { return kSchemes.count(name) > 0; }

void apply(Settings& s, const std::string& variable, double value) {
  if (variable == "P0_dBm") {
    s.budget.p0_dbm = value;
  } else if (variable == "rho") {
    s.rho = value;
  } else if (variable == "alpha") {
    s.alpha = value;
  } else if (variable == "beta") {
    s.beta = value;
  } else if (variable == "eta") {
    s.eta = value;
  } else if (variable == "lambda") {
    if (!(value > 0.0)) throw ConfigError("lambda must be positive");
    s.lambda_active = value;
  } else if (variable == "p_message") {
    s.p_message = value;
  } else if (variable == "M") {
    const int M = static_cast<int>(std::lround(value));
    auto it = s.topology_by_nodes.find(M);
    if (it == s.topology_by_nodes.end())
      throw ConfigError("M sweep: no topology for M = " + std::to_string(M) + " in topology_by_nodes");
    s.topology_name = it->second;
    s.topology = preset_topology(it->second);
  } else if (variable == "K") {
    const int K = static_cast<int>(std::lround(value));
    if (K < 0 || std::abs(value - K) > 1e-12) throw ConfigError("K must be a non-negative integer");
    for (auto& h : s.topology.hops) h.users = K;
  } else {
    throw ConfigError("unknown sweep variable '" + variable + "'");
  }
}

Scenario make_scenario(const std::string& scheme, const Settings& st, channel::FitCache& fits) {
  if (!known_scheme(scheme)) throw ConfigError("unknown scheme '" + scheme + "'");
  const bool cnrr = scheme == "CNRR";
  const bool eh = !cnrr && scheme.size() == 4;  // TCoM, TQoM, PCoM, PQoM
  const bool ps = scheme.front() == 'P';
  const bool qom = scheme.find("QoM") != std::string::npos;

  Scenario s;
  s.scheme = scheme;
  s.topology = st.topology;
  for (auto& h : s.topology.hops) {
    h.lambda_active = st.lambda_active;
    h.lambda_inactive = st.lambda_inactive;
    if (cnrr) h.users = 0;
  }
  s.budget = st.budget;
  s.pairing = qom ? Pairing::qom : Pairing::com;
  const Architecture arch = ps ? Architecture::bpeh : Architecture::bteh;
  s.policy = EhPolicy::uniform(s.topology.nodes(), arch, eh ? st.rho : 0.0, st.alpha, st.beta, st.eta);
  s.plan = analytics::default_plan(s.topology, s.pairing, arch, st.alpha, st.p_message, st.rates);
  // CNRR relays s_M alone but keeps the message target of the NOMA schemes.
  if (cnrr) s.plan.p_message = 1.0;
  s.empty_annulus = st.empty_annulus;
  if (qom) {
    for (const auto& h : s.topology.hops)
      s.fits.push_back(h.users > 0 ? fits.get(h.lambda_active, h.radius, s.budget) : FittedGainDistribution{});
  }
  s.validate();
  return s;
}

namespace {

bool wants(const SweepSpec& spec, const std::string& out) {
  return std::find(spec.outputs.begin(), spec.outputs.end(), out) != spec.outputs.end();
}

std::string hop_name(int t) { return "op_hop_t" + std::to_string(t); }
std::string dev_name(int t, int k) { return "op_dev_t" + std::to_string(t) + "_k" + std::to_string(k); }
std::string dev_e2e_name(int t, int k) { return "op_dev_e2e_t" + std::to_string(t) + "_k" + std::to_string(k); }

// One value per metric, in output order.
struct Metric {
  std::string name;
  double mean;
  double half_width;
  long trials;
};

// Common view over analytic and MC results.
struct Outcome {
  std::vector<double> hop;
  std::vector<std::vector<double>> device, device_e2e;
  std::vector<long> hop_n;
  std::vector<std::vector<long>> device_n;
  std::vector<double> hop_hw;
  std::vector<std::vector<double>> device_hw, device_e2e_hw;
  double e2e = 0.0, e2e_hw = 0.0;
  long trials = 0;
  double throughput = 0.0, throughput_hw = 0.0;
  double fixed_power = 0.0;
};

Outcome from_report(const Scenario& s, const analytics::Report& r) {
  Outcome o;
  o.hop = r.hop;
  o.device = r.device;
  o.device_e2e = r.device_e2e;
  o.hop_hw.assign(r.hop.size(), 0.0);
  o.hop_n.assign(r.hop.size(), 0);
  for (const auto& d : r.device) {
    o.device_hw.emplace_back(d.size(), 0.0);
    o.device_e2e_hw.emplace_back(d.size(), 0.0);
    o.device_n.emplace_back(d.size(), 0);
  }
  o.e2e = r.e2e_type1;
  o.throughput = r.throughput;
  o.fixed_power = power::total_fixed_power(s);
  return o;
}

Outcome from_mc(const montecarlo::McReport& r) {
  Outcome o;
  for (const auto& e : r.hop) {
    o.hop.push_back(e.mean);
    o.hop_hw.push_back(e.half_width);
    o.hop_n.push_back(e.trials);
  }
  for (std::size_t t = 0; t < r.device.size(); ++t) {
    std::vector<double> m, hw, me, hwe;
    std::vector<long> n;
    for (std::size_t k = 0; k < r.device[t].size(); ++k) {
      m.push_back(r.device[t][k].mean);
      hw.push_back(r.device[t][k].half_width);
      me.push_back(r.device_e2e[t][k].mean);
      hwe.push_back(r.device_e2e[t][k].half_width);
      n.push_back(r.device[t][k].trials);
    }
    o.device.push_back(m);
    o.device_hw.push_back(hw);
    o.device_e2e.push_back(me);
    o.device_e2e_hw.push_back(hwe);
    o.device_n.push_back(n);
  }
  o.e2e = r.e2e_type1.mean;
  o.e2e_hw = r.e2e_type1.half_width;
  o.trials = r.e2e_type1.trials;
  o.throughput = r.throughput.mean;
  o.throughput_hw = r.throughput.half_width;
  o.fixed_power = r.fixed_power.mean;
  return o;
}

std::vector<Metric> op_metrics(const SweepSpec& spec, const Outcome& o) {
  std::vector<Metric> out;
  const bool all = wants(spec, "op");
  if (all || wants(spec, "op_hop"))
    for (std::size_t t = 0; t < o.hop.size(); ++t)
      out.push_back({hop_name(static_cast<int>(t) + 1), o.hop[t], o.hop_hw[t], o.hop_n[t]});
  if (all || wants(spec, "op_device"))
    for (std::size_t t = 0; t < o.device.size(); ++t)
      for (std::size_t k = 0; k < o.device[t].size(); ++k) {
        const int ti = static_cast<int>(t) + 1, ki = static_cast<int>(k) + 1;
        out.push_back({dev_name(ti, ki), o.device[t][k], o.device_hw[t][k], o.device_n[t][k]});
        out.push_back({dev_e2e_name(ti, ki), o.device_e2e[t][k], o.device_e2e_hw[t][k], o.device_n[t][k]});
      }
  if (all || wants(spec, "op_e2e")) out.push_back({"op_e2e", o.e2e, o.e2e_hw, o.trials});
  return out;
}

struct Job {
  std::size_t point;
  std::string scheme;
};

struct Point {
  std::string label;  // sweep_var column
  double value;
  double outer_value;
  Settings settings;
};

struct JobResult {
  std::vector<Row> rows;
  std::vector<std::string> flagged;
  std::vector<std::string> failures;
  std::optional<analytics::Report> report;  // kept for diversity fits
};

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Throughput-maximising K pattern over {1..max_users}^{M-1} for CoM schemes.
Settings best_pattern(const std::string& scheme, const Settings& st, channel::FitCache& fits) {
  if (scheme.find("CoM") == std::string::npos) return st;
  const int H = static_cast<int>(st.topology.hops.size());
  Settings best = st;
  double best_T = -1.0;
  std::vector<int> K(H, 1);
  while (true) {
    Settings cand = st;
    for (int t = 0; t < H; ++t) cand.topology.hops[t].users = K[t];
    const double T = analytics::evaluate(make_scenario(scheme, cand, fits)).throughput;
    if (T > best_T) {
      best_T = T;
      best = cand;
    }
    int i = 0;
    while (i < H && ++K[i] > st.max_users) K[i++] = 1;
    if (i == H) break;
  }
  return best;
}

// Probabilities compare at 3σ of the analytic binomial; e2e figures rest on
// the independent-hop product and get a 0.02 absolute allowance.
bool disagree(const std::string& metric, double analytic, double mc, double mc_hw, long n, double throughput_scale) {
  if (std::isnan(analytic) || std::isnan(mc)) return false;
  const double diff = std::abs(analytic - mc);
  if (metric == "throughput") return diff > std::max(3.0 * mc_hw / 1.96, 0.02 * throughput_scale);
  if (metric.rfind("op_", 0) != 0 || n <= 0) return false;
  const double sigma = std::sqrt(std::max(analytic * (1.0 - analytic), 0.0) / n);
  const bool e2e = metric == "op_e2e" || metric.rfind("op_dev_e2e", 0) == 0;
  // A point where even the analytic value has no variance is compared exactly.
  return diff > std::max(3.0 * sigma, e2e ? 0.02 : 0.0) + 1e-12;
}

JobResult run_job(const SweepSpec& spec, const std::vector<Source>& sources, long trials, std::uint64_t seed,
                  const Point& pt, const std::string& scheme, channel::FitCache& fits) {
  JobResult jr;
  auto row = [&](const std::string& metric, Source src, double mean, double hw, long n, bool stochastic) {
    jr.rows.push_back({pt.label, pt.value, scheme, metric, source_name(src), mean, hw, n, stochastic ? seed : 0});
  };
  const bool need_ops = wants(spec, "op") || wants(spec, "op_e2e") || wants(spec, "op_hop") || wants(spec, "op_device");
  const bool need_ee = wants(spec, "ee") || wants(spec, "eed");

  std::optional<Scenario> scen;
  try {
    scen = make_scenario(scheme, pt.settings, fits);
  } catch (const std::exception& e) {
    jr.failures.push_back(pt.label + "=" + format_double(pt.value) + " " + scheme + ": " + e.what());
    return jr;
  }
  const Scenario& s = *scen;
  const double bw = s.budget.bandwidth_hz;
  double upper = s.plan.rate_message;
  for (int t = 1; t <= s.hops(); ++t)
    for (int k = 1; k <= s.devices(t); ++k) upper += s.plan.rate_device[t - 1][k - 1];
  upper /= s.nodes() - 1;

  std::map<std::string, std::pair<double, double>> analytic_vals;  // metric -> (mean, -)
  std::map<std::string, std::pair<Metric, bool>> mc_vals;

  for (Source src : sources) {
    const bool mc = src == Source::mc;
    const std::string tag = pt.label + "=" + format_double(pt.value) + " " + scheme + " " + source_name(src);
    auto evaluate = [&](const Scenario& sc) -> Outcome {
      switch (src) {
        case Source::analytic:
          return from_report(sc, analytics::evaluate(sc));
        case Source::asymptotic:
          return from_report(sc, analytics::evaluate_asymptotic(sc));
        case Source::mc:
          break;
      }
      return from_mc(montecarlo::simulate(sc, trials, seed, 1));
    };
    try {
      Outcome o = evaluate(s);
      if (src == Source::analytic && wants(spec, "diversity")) jr.report = analytics::evaluate(s);
      if (need_ops)
        for (const auto& m : op_metrics(spec, o)) {
          row(m.name, src, m.mean, m.half_width, mc ? m.trials : 0, mc);
          if (src == Source::analytic) analytic_vals[m.name] = {m.mean, 0.0};
          if (mc) mc_vals[m.name] = {m, true};
        }
      if (wants(spec, "throughput")) {
        row("throughput", src, o.throughput, o.throughput_hw, mc ? o.trials : 0, mc);
        if (src == Source::analytic) analytic_vals["throughput"] = {o.throughput, 0.0};
        if (mc) mc_vals["throughput"] = {{"throughput", o.throughput, o.throughput_hw, o.trials}, true};
      }
      if (need_ee) {
        const double ee = bw * o.throughput / o.fixed_power;
        const double ee_hw = bw * o.throughput_hw / o.fixed_power;
        if (wants(spec, "ee")) row("ee", src, ee, ee_hw, mc ? o.trials : 0, mc);
        if (wants(spec, "eed")) {
          Settings base = pt.settings;
          base.rho = 0.0;
          const Outcome o0 = evaluate(make_scenario(scheme, base, fits));
          const double ee0 = bw * o0.throughput / o0.fixed_power;
          row("eed", src, ee - ee0, std::hypot(ee_hw, bw * o0.throughput_hw / o0.fixed_power), mc ? o.trials : 0,
              mc);
        }
      }
      if (wants(spec, "max_throughput")) {
        const Settings best = best_pattern(scheme, pt.settings, fits);
        const Outcome ob = evaluate(make_scenario(scheme, best, fits));
        row("max_throughput", src, ob.throughput, ob.throughput_hw, mc ? ob.trials : 0, mc);
      }
    } catch (const std::exception& e) {
      jr.failures.push_back(tag + ": " + e.what());
      row("error", src, kNaN, kNaN, 0, mc);
    }
  }
  for (const auto& [name, mv] : mc_vals) {
    auto it = analytic_vals.find(name);
    if (it == analytic_vals.end()) continue;
    const auto& m = mv.first;
    if (disagree(name, it->second.first, m.mean, m.half_width, m.trials, upper)) {
      std::ostringstream msg;
      msg << pt.label << "=" << format_double(pt.value) << " " << scheme << " " << name
          << ": analytic " << format_double(it->second.first) << " vs mc " << format_double(m.mean) << " (n="
          << m.trials << ")";
      jr.flagged.push_back(msg.str());
    }
  }
  return jr;
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options, channel::FitCache& fits) {
  const long trials = options.trials.value_or(spec.trials);
  const std::uint64_t seed = options.seed.value_or(spec.seed);
  const auto sources = options.sources.value_or(spec.sources);
  if (trials <= 0) throw ConfigError("trials must be positive");

  std::vector<Point> points;
  const std::vector<double> outer_grid = spec.outer ? spec.outer->grid : std::vector<double>{kNaN};
  for (double ov : outer_grid) {
    std::string label = spec.axis.variable;
    if (spec.outer) label += "[" + spec.outer->variable + "=" + format_double(ov) + "]";
    for (double v : spec.axis.grid) {
      Settings st = spec.base;
      if (spec.outer) apply(st, spec.outer->variable, ov);
      apply(st, spec.axis.variable, v);
      points.push_back({label, v, ov, st});
    }
  }
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (const auto& sch : spec.schemes) jobs.push_back({p, sch});

  std::vector<JobResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++)
      results[j] = run_job(spec, sources, trials, seed, points[jobs[j].point], jobs[j].scheme, fits);
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult out;
  for (auto& r : results) {
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
    out.flagged.insert(out.flagged.end(), r.flagged.begin(), r.flagged.end());
    out.failures.insert(out.failures.end(), r.failures.begin(), r.failures.end());
  }

  if (wants(spec, "diversity")) {
    // One slope per (outer value, scheme, e2e metric) from the analytic curves.
    for (std::size_t first = 0; first < points.size(); first += spec.axis.grid.size())
      for (std::size_t si = 0; si < spec.schemes.size(); ++si) {
        std::map<std::string, std::vector<double>> curves;
        std::vector<double> snr;
        bool complete = true;
        for (std::size_t p = first; p < first + spec.axis.grid.size(); ++p) {
          const auto& jr = results[p * spec.schemes.size() + si];
          if (!jr.report) {
            complete = false;
            break;
          }
          snr.push_back(points[p].value);
          curves["op_e2e"].push_back(jr.report->e2e_type1);
          for (std::size_t t = 0; t < jr.report->device_e2e.size(); ++t)
            for (std::size_t k = 0; k < jr.report->device_e2e[t].size(); ++k)
              curves[dev_e2e_name(static_cast<int>(t) + 1, static_cast<int>(k) + 1)].push_back(
                  jr.report->device_e2e[t][k]);
        }
        if (!complete) continue;
        for (const auto& [name, curve] : curves) {
          if (curve.size() != snr.size()) continue;
          Row r{points[first].label, snr.back(), spec.schemes[si], "diversity_" + name, "analytic", kNaN, 0.0, 0, 0};
          try {
            const auto fit = analytics::diversity_order_estimate(snr, curve, spec.diversity_window_db);
            r.mean = fit.slope;
            r.trials = fit.used;
          } catch (const std::exception& e) {
            out.failures.push_back(r.sweep_var + " " + r.scheme + " " + r.metric + ": " + e.what());
          }
          out.rows.push_back(r);
        }
      }
  }
  return out;
}

void write_csv(std::ostream& os, const std::vector<Row>& rows) {
  os << "sweep_var,value,scheme,metric,source,mean,ci_half_width,trials,seed\n";
  for (const auto& r : rows)
    os << r.sweep_var << ',' << format_double(r.value) << ',' << r.scheme << ',' << r.metric << ',' << r.source << ','
       << format_double(r.mean) << ',' << format_double(r.ci_half_width) << ',' << r.trials << ',' << r.seed << '\n';
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_json_number(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

void write_jsonl(std::ostream& os, const std::vector<Row>& rows) {
  for (const auto& r : rows) {
    json j;
    j["sweep_var"] = r.sweep_var;
    j["value"] = number_or_null(r.value);
    j["scheme"] = r.scheme;
    j["metric"] = r.metric;
    j["source"] = r.source;
    j["mean"] = number_or_null(r.mean);
    j["ci_half_width"] = number_or_null(r.ci_half_width);
    j["trials"] = r.trials;
    j["seed"] = r.seed;
    os << j.dump() << '\n';
  }
}

std::vector<Row> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "sweep_var,value,scheme,metric,source,mean,ci_half_width,trials,seed")
    throw std::runtime_error("read_csv: unexpected header");
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw std::runtime_error("read_csv: expected 9 fields in '" + line + "'");
    rows.push_back({f[0], std::strtod(f[1].c_str(), nullptr), f[2], f[3], f[4], std::strtod(f[5].c_str(), nullptr),
                    std::strtod(f[6].c_str(), nullptr), std::stol(f[7]), std::stoull(f[8])});
  }
  return rows;
}

std::vector<Row> read_jsonl(std::istream& is) {
  std::vector<Row> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    rows.push_back({j.at("sweep_var"), from_json_number(j.at("value")), j.at("scheme"), j.at("metric"),
                    j.at("source"), from_json_number(j.at("mean")), from_json_number(j.at("ci_half_width")),
                    j.at("trials").get<long>(), j.at("seed").get<std::uint64_t>()});
  }
  return rows;
}

void emit_results(const std::vector<Row>& rows, const std::string& path, Format format) {
  if (rows.empty()) throw std::invalid_argument("emit_results: empty table");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  if (format == Format::csv) {
    write_csv(out, rows);
  } else {
    write_jsonl(out, rows);
  }
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace mmtc::experiments
