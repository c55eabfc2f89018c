#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmtc/channel.hpp"
#include "mmtc/scenario.hpp"

namespace mmtc::experiments {

/// Everything a sweep point needs besides the scheme.
struct Settings {
  std::string topology_name = "T1";  // empty when `topology` was given as rows
  Topology topology = preset_topology("T1");
  std::map<int, std::string> topology_by_nodes;  // used by M sweeps
  double lambda_active = 1e-2;
  double lambda_inactive = 1e-3;
  LinkBudget budget;
  double rho = 0.1;
  double alpha = 0.2;
  double beta = 0.8;
  double eta = 1.0;
  double p_message = 0.8;
  RatePolicy rates;
  EmptyAnnulus empty_annulus = EmptyAnnulus::resample;
  int max_users = 3;  // K_t range for max_throughput
};

struct SweepAxis {
  std::string variable;
  std::vector<double> grid;
};

enum class Source { analytic, mc, asymptotic };

struct SweepSpec {
  std::string name;
  Settings base;
  SweepAxis axis;
  std::optional<SweepAxis> outer;  // second dimension, reported as var[outer=v]
  std::vector<std::string> schemes;
  std::vector<std::string> outputs;
  std::vector<Source> sources{Source::analytic};
  long trials = 1000000;
  std::uint64_t seed = 1;
  double diversity_window_db = 10.0;
};

SweepSpec parse_config(const nlohmann::json& doc);
SweepSpec load_config(const std::string& path);

/// Schemes: TCoM TQoM PCoM PQoM (EH), CoM QoM (no EH) and CNRR.
bool known_scheme(const std::string& name);
Scenario make_scenario(const std::string& scheme, const Settings& settings, channel::FitCache& fits);

/// Set one swept variable: P0_dBm, rho, alpha, beta, eta, lambda, M, K, p_message.
void apply(Settings& s, const std::string& variable, double value);

struct Row {
  std::string sweep_var;
  double value = 0.0;
  std::string scheme;
  std::string metric;
  std::string source;
  double mean = 0.0;
  double ci_half_width = 0.0;
  long trials = 0;
  std::uint64_t seed = 0;
};

struct RunOptions {
  std::optional<long> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<Source>> sources;
  int threads = 1;
};

struct SweepResult {
  std::vector<Row> rows;
  std::vector<std::string> flagged;  // analytic/MC disagreements
  std::vector<std::string> failures;  // rows whose evaluation raised
};

SweepResult run_sweep(const SweepSpec& spec, const RunOptions& options, channel::FitCache& fits);

enum class Format { csv, jsonl };

void write_csv(std::ostream& os, const std::vector<Row>& rows);
void write_jsonl(std::ostream& os, const std::vector<Row>& rows);
std::vector<Row> read_csv(std::istream& is);
std::vector<Row> read_jsonl(std::istream& is);
/// Writes to `path`; IO failures raise std::runtime_error naming the path.
void emit_results(const std::vector<Row>& rows, const std::string& path, Format format);

const char* source_name(Source s);
Source parse_source(const std::string& name);

}  // namespace mmtc::experiments
