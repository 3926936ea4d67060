// Command-line experiment runner.
//
//   swarmsim <subcommand> [--config FILE] [--seed N] [--out DIR] [--replicas N]
//
// Exit status is 0 iff every analysis passes its tolerances.

#include <CLI11.hpp>
#include <iostream>

#include "swarm/harness.hpp"

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> replicas;
};

swarm::ExperimentSpec resolve_spec(const GlobalOptions& opts, swarm::AnalysisKind fallback,
                                   std::vector<swarm::AnalysisKind> analyses) {
  swarm::ExperimentSpec spec = opts.config.empty() ? swarm::default_spec(fallback) : swarm::load_config(opts.config);
  if (!opts.config.empty() || !analyses.empty()) spec.analyses = std::move(analyses);
  if (opts.seed) spec.sim.seed = *opts.seed;
  if (opts.out) spec.outputs = *opts.out;
  if (opts.replicas) spec.replicas = *opts.replicas;
  spec.validate();
  return spec;
}

int report_and_exit(const swarm::ExperimentSpec& spec, const std::vector<swarm::AnalysisReport>& reports) {
  swarm::write_report(std::cout, reports);
  bool ok = true;
  for (const auto& r : reports) {
    for (const auto& note : r.notes) std::cerr << r.analysis << ": " << note << '\n';
    ok = ok && r.passed();
  }
  std::cerr << "outputs written to " << spec.outputs.string() << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swarm density-regulation simulator and analysis harness"};
  app.require_subcommand(1);

  GlobalOptions opts;
  std::uint64_t seed = 0;
  std::string out;
  int replicas = 0;
  app.add_option("--config", opts.config, "Experiment config file (key = value)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Base seed; replica i uses seed + i");
  auto* out_opt = app.add_option("--out", out, "Output directory");
  auto* replicas_opt = app.add_option("--replicas", replicas, "Number of replicas")->check(CLI::PositiveNumber);
  app.fallthrough();

  using swarm::AnalysisKind;
  struct Command {
    const char* name;
    const char* help;
    AnalysisKind fallback;
    std::vector<AnalysisKind> analyses;
  };
  const std::vector<Command> commands = {
      {"validate-encounters", "Inter-encounter and resolution-time distributions", AnalysisKind::EncounterFit,
       {AnalysisKind::EncounterFit, AnalysisKind::ResolutionFit}},
      {"validate-tasks", "Lone-robot pick-up rate", AnalysisKind::TaskFit, {AnalysisKind::TaskFit}},
      {"estimator-bias", "Population-mean density estimate vs truth", AnalysisKind::EstimatorBias,
       {AnalysisKind::EstimatorBias}},
      {"closed-loop", "Decentralized voluntary retreat", AnalysisKind::ClosedLoop, {AnalysisKind::ClosedLoop}},
      {"throughput-curve", "Steady-state throughput over a density grid", AnalysisKind::ThroughputCurve,
       {AnalysisKind::ThroughputCurve}},
      {"optimal-density", "Optimal density with closed-form cross-check", AnalysisKind::OptimalDensity,
       {AnalysisKind::OptimalDensity}},
      {"full-sim", "Run the simulator and write events/metrics (plus any analyses in the config)",
       AnalysisKind::EstimatorBias, {}},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help);

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) opts.seed = seed;
  if (*out_opt) opts.out = out;
  if (*replicas_opt) opts.replicas = replicas;

  try {
    for (const auto& c : commands) {
      if (!app.got_subcommand(c.name)) continue;
      std::vector<AnalysisKind> analyses = c.analyses;
      const bool full = std::string_view(c.name) == "full-sim";
      if (full && !opts.config.empty()) analyses = swarm::load_config(opts.config).analyses;
      swarm::ExperimentSpec spec = resolve_spec(opts, c.fallback, analyses);
      if (full && opts.config.empty()) spec.analyses.clear();
      if (full && !opts.out) spec.outputs = "out/full-sim";
      std::cerr << "running " << c.name << " (" << spec.replicas << " replica(s), seed " << spec.sim.seed << ")\n";
      return report_and_exit(spec, swarm::run_experiment(spec));
    }
  } catch (const swarm::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
