#ifndef SWARM_HARNESS_HPP
#define SWARM_HARNESS_HPP

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swarm/ctmc.hpp"
#include "swarm/simulator.hpp"

namespace swarm {

enum class AnalysisKind {
  EncounterFit,
  ResolutionFit,
  TaskFit,
  EstimatorBias,
  ClosedLoop,
  ThroughputCurve,
  OptimalDensity,
};

std::string_view to_string(AnalysisKind kind);
std::optional<AnalysisKind> parse_analysis_kind(std::string_view text);

struct ExperimentSpec {
  std::string name{"experiment"};
  SimConfig sim;
  int replicas{1};
  std::filesystem::path outputs{"out"};
  std::vector<AnalysisKind> analyses;

  double cost_c{0.05};        ///< deployment cost used to derive lambda*
  double warmup{5};           ///< events before this time are ignored by fits
  double lambda_max{20};      ///< throughput-curve grid upper end
  int curve_points{401};
  int histogram_bins{40};
  int metrics_every{1};       ///< thinning of written metrics CSVs, in ticks

  CtmcConfig<double> ctmc() const { return {sim.params, cost_c}; }
  /// Throws InvalidInput naming the offending field.
  void validate() const;

  bool operator==(const ExperimentSpec&) const = default;
};

/// Parses `key = value` text. Unknown keys, malformed numbers, missing
/// required keys and invariant violations raise InvalidInput naming the key.
ExperimentSpec parse_config(std::string_view text);
ExperimentSpec load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentSpec& spec);

/// lambda* for the experiment's parameters and cost (0 when degenerate).
double resolve_lambda_star(const ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Reports

enum class Comparison { AtMost, AtLeast, Equal, Info };

struct Metric {
  std::string name;
  double value{0};
  Comparison comparison{Comparison::Info};
  double threshold{0};

  bool passed() const;
  std::string tolerance_text() const;
};

struct AnalysisReport {
  std::string analysis;
  std::vector<Metric> metrics;
  std::vector<std::string> notes;
  bool partial{false};

  bool passed() const;
  void add(std::string name, double value, Comparison comparison = Comparison::Info, double threshold = 0);
};

/// Writes `analysis,metric,value,tolerance,pass` lines (with header).
void write_report(std::ostream& os, std::span<const AnalysisReport> reports);

// ---------------------------------------------------------------------------
// Event-log post-processing

/// Per-robot gaps between successive EncounterStart events at or after `from`.
std::vector<double> inter_encounter_intervals(std::span<const SimEvent> events, double from = 0);
/// Durations of completed encounters that started at or after `from`, one per pair.
std::vector<double> resolution_times(std::span<const SimEvent> events, double from = 0);
/// Time from becoming Searching (start of run or a Dropoff) to the next Pickup.
std::vector<double> search_durations(std::span<const SimEvent> events, double from = 0);

struct HistogramBin {
  double left;
  double right;
  long count;
  double theory_density;  ///< mean exponential pdf over the bin
};

std::vector<HistogramBin> exponential_histogram(std::span<const double> samples, double rate, int bins);

void write_histogram_csv(std::ostream& os, std::span<const HistogramBin> bins);
void write_events_csv(std::ostream& os, std::span<const SimEvent> events);
std::vector<SimEvent> read_events_csv(std::istream& is);
void write_metrics_csv(std::ostream& os, std::span<const MetricsRow> rows);

// ---------------------------------------------------------------------------
// Experiments

/// Runs `fn(replica_index, config)` for every replica with seed = base + index.
/// Replicas run concurrently; results are returned in replica order.
template <typename Result>
std::vector<Result> run_replicas(const SimConfig& base, int replicas,
                                 const std::function<Result(int, const SimConfig&)>& fn);

/// Runs the experiment's replicas and every requested analysis, writes CSV outputs
/// and `report.csv` under spec.outputs when `write_outputs` is set.
std::vector<AnalysisReport> run_experiment(const ExperimentSpec& spec, bool write_outputs = true);

/**
 * Full decentralized loop from the experiment's initial population, plus the
 * ensemble ODE reference and a controller-disabled growth run. Refuses a
 * degenerate lambda* = 0.
 */
AnalysisReport closed_loop_experiment(const ExperimentSpec& spec, bool write_outputs = true);

AnalysisReport throughput_curve_analysis(const ExperimentSpec& spec, bool write_outputs = true);
AnalysisReport optimal_density_analysis(const ExperimentSpec& spec);

/// Defaults for each analysis; used by the CLI when no config is given and by the acceptance suite.
ExperimentSpec default_spec(AnalysisKind kind);

}  // namespace swarm

#include "swarm/detail/replicas.hpp"

#endif  // SWARM_HARNESS_HPP
