#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mmtc/errors.hpp"
#include "mmtc/experiments.hpp"
#include "mmtc/montecarlo.hpp"

namespace ex = mmtc::experiments;

namespace {

std::vector<ex::Source> sources_from_flag(const std::string& flag) {
  if (flag == "both") return {ex::Source::analytic, ex::Source::mc};
  if (flag == "all") return {ex::Source::analytic, ex::Source::mc, ex::Source::asymptotic};
  return {ex::parse_source(flag)};
}

// Fits needed by every QoM scheme at every grid point.
void fill_fits(const ex::SweepSpec& spec, mmtc::channel::FitCache& cache) {
  const std::vector<double> outer = spec.outer ? spec.outer->grid : std::vector<double>{0.0};
  for (double ov : outer)
    for (double v : spec.axis.grid) {
      ex::Settings st = spec.base;
      if (spec.outer) ex::apply(st, spec.outer->variable, ov);
      ex::apply(st, spec.axis.variable, v);
      for (const auto& sch : spec.schemes) (void)ex::make_scenario(sch, st, cache);
    }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hop NOMA mMTC outage and throughput experiments"};
  app.require_subcommand(1);

  std::string config, out, format = "csv", source, fit_cache;
  long trials = 0;
  std::uint64_t seed = 0;
  int threads = 1;

  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and write the result table");
  sweep->add_option("--config", config, "sweep configuration (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "output path")->required();
  sweep->add_option("--trials", trials, "Monte Carlo trials per point (overrides the config)");
  sweep->add_option("--seed", seed, "Monte Carlo seed (overrides the config)");
  sweep->add_option("--format", format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  sweep->add_option("--source", source, "analytic, mc, asymptotic, both or all (overrides the config)")
      ->check(CLI::IsMember({"analytic", "mc", "asymptotic", "both", "all"}));
  sweep->add_option("--threads", threads, "worker threads over grid points")->check(CLI::PositiveNumber);
  sweep->add_option("--fit-cache", fit_cache, "JSON file of Singh-Maddala fits (read, then updated)");

  auto* validate = app.add_subcommand("validate", "check a configuration without running it");
  validate->add_option("--config", config, "sweep configuration (JSON)")->required()->check(CLI::ExistingFile);

  auto* fits = app.add_subcommand("fit-cache", "precompute the nearest-gain fits a configuration needs");
  fits->add_option("--config", config, "sweep configuration (JSON)")->required()->check(CLI::ExistingFile);
  fits->add_option("--out", out, "fit cache path (merged if it exists)")->required();

  std::string scheme = "TCoM";
  auto* dump = app.add_subcommand("dump", "write raw Monte Carlo trials at the base settings of a configuration");
  dump->add_option("--config", config, "sweep configuration (JSON)")->required()->check(CLI::ExistingFile);
  dump->add_option("--scheme", scheme, "scheme to simulate");
  dump->add_option("--out", out, "CSV output path")->required();
  dump->add_option("--trials", trials, "number of trials")->required();
  dump->add_option("--seed", seed, "seed");
  dump->add_option("--fit-cache", fit_cache, "JSON file of Singh-Maddala fits");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto spec = ex::load_config(config);
    if (*validate) {
      mmtc::channel::FitCache cache;
      fill_fits(spec, cache);
      std::cout << "ok: " << (spec.name.empty() ? config : spec.name) << "\n";
      return 0;
    }
    if (*fits) {
      mmtc::channel::FitCache cache(out);
      fill_fits(spec, cache);
      cache.save();
      std::cout << "fits: " << cache.size() << " entries in " << out << "\n";
      return 0;
    }
    if (*dump) {
      mmtc::channel::FitCache cache(fit_cache);
      const auto s = ex::make_scenario(scheme, spec.base, cache);
      std::ofstream os(out);
      if (!os) throw std::runtime_error("cannot open '" + out + "' for writing");
      mmtc::montecarlo::dump_trials(os, s, trials, seed);
      return 0;
    }

    mmtc::channel::FitCache cache(fit_cache);
    ex::RunOptions opt;
    if (trials > 0) opt.trials = trials;
    if (sweep->count("--seed")) opt.seed = seed;
    if (!source.empty()) opt.sources = sources_from_flag(source);
    opt.threads = threads;
    const auto result = ex::run_sweep(spec, opt, cache);
    ex::emit_results(result.rows, out, format == "csv" ? ex::Format::csv : ex::Format::jsonl);
    if (!fit_cache.empty()) cache.save();
    for (const auto& f : result.failures) std::cerr << "failed: " << f << "\n";
    for (const auto& f : result.flagged) std::cerr << "flagged: " << f << "\n";
    std::cerr << result.rows.size() << " rows, " << result.flagged.size() << " flagged, " << result.failures.size()
              << " failed -> " << out << "\n";
    if (!result.failures.empty()) return 3;
    return result.flagged.empty() ? 0 : 2;
  } catch (const mmtc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
