// Command-line front end: run, validate and summarize experiments.

#include "infmcmc/errors.hpp"
#include "infmcmc/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace infmcmc;

namespace {

void print_summary(const std::vector<SummaryRow> &rows) {
  std::printf("%-16s %6s %11s %28s %10s %8s %10s\n", "method", "AP", "s/iter",
              "ESS(min,med,max)", "minESS/s", "spdup", "solves");
  for (const SummaryRow &r : rows) {
    char ess[64];
    std::snprintf(ess, sizeof ess, "(%.1f,%.1f,%.1f)", r.ess_min, r.ess_med, r.ess_max);
    std::printf("%-16s %6.3f %11.3e %28s %10.3f %8.2f %10ld\n", r.method.c_str(), r.ap,
                r.sec_per_iter, ess, r.min_ess_per_sec, r.speedup, r.pde_solves);
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Function-space MCMC experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  auto *run = app.add_subcommand("run", "Run every chain in a configuration");
  run->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Override the output directory");
  run->add_option("-j,--jobs", jobs, "Chains to run in parallel")->check(CLI::PositiveNumber);

  auto *validate = app.add_subcommand("validate", "Check a configuration without running");
  validate->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);

  std::string dir;
  std::string baseline;
  auto *summarize = app.add_subcommand("summarize", "Recompute summary.csv/json in a run directory");
  summarize->add_option("dir", dir, "Run output directory")->required()->check(CLI::ExistingDirectory);
  summarize->add_option("--baseline", baseline, "Override the baseline algorithm");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const ExperimentConfig cfg = load_config(config_path);
      std::cout << "ok: " << cfg.algorithms.size() << " algorithm(s), baseline "
                << cfg.baseline << '\n';
      return 0;
    }
    if (*run) {
      const ExperimentConfig cfg = load_config(config_path);
      RunOptions opts;
      if (!out_dir.empty())
        opts.output_dir = out_dir;
      opts.jobs = jobs;
      const RunResult res = run_experiment(cfg, opts);
      print_summary(res.summary);
      std::cout << "wrote " << res.output_dir.string() << '\n';
      return 0;
    }
    if (*summarize) {
      std::optional<std::string> base;
      if (!baseline.empty())
        base = baseline;
      print_summary(summarize_directory(dir, base));
      return 0;
    }
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SolverFailure &e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
