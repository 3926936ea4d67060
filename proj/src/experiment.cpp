#include <cmath>
#include <fstream>
#include <numeric>

#include "swarm/harness.hpp"

namespace swarm {

namespace {

// Acceptance tolerances.
constexpr double kEncounterMeanTol = 0.15;
constexpr double kEncounterKsTol = 0.05;
constexpr double kEncounterMinSamples = 5000;
constexpr double kResolutionKsTol = 0.05;
constexpr double kResolutionMinSamples = 5000;
constexpr double kTaskMeanTol = 0.15;
constexpr double kTaskMinSamples = 2000;
constexpr double kEstimatorTol = 0.10;
constexpr double kEstimatorMinRobots = 50;
constexpr double kEstimatorMinCounts = 20;
constexpr double kRegulationTol = 0.15;
constexpr double kGrowthTol = 0.10;
constexpr double kOptimumTol = 1e-6;

SwarmParamsd reference_params() {
  SwarmParamsd p;
  p.r = 0.05;
  p.delta = 0.11;
  p.v = 1.0;
  p.lambda_p = 1.0;
  p.lambda_d = 1.0;
  p.lambda_in = 0.0;
  p.rho = 2.44;
  return p;
}

double relative_error(double value, double reference) { return std::abs(value - reference) / std::abs(reference); }

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory " + dir.string() + ": " + ec.message());
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  writer(out);
}

std::vector<MetricsRow> thin(const std::vector<MetricsRow>& rows, int every) {
  std::vector<MetricsRow> out;
  for (std::size_t i = 0; i < rows.size(); i += static_cast<std::size_t>(every)) out.push_back(rows[i]);
  if (!rows.empty() && (rows.size() - 1) % static_cast<std::size_t>(every) != 0) out.push_back(rows.back());
  return out;
}

// What one replica contributes to the sampled analyses.
struct ReplicaSamples {
  bool ok{true};
  std::string error;
  std::vector<double> intervals;
  std::vector<double> resolutions;
  std::vector<double> searches;
  double lambda_hat_sum{0};
  double lambda_true_sum{0};
  long estimator_ticks{0};
  int min_ready_robots{-1};
  std::vector<SimEvent> events;      // replica 0 only
  std::vector<MetricsRow> metrics;   // replica 0 only
};

ReplicaSamples run_sampled_replica(const ExperimentSpec& spec, int index, const SimConfig& config) {
  ReplicaSamples out;
  try {
    World world(config);
    const auto ticks = static_cast<long>(std::llround(config.total_time / config.tick_dt));
    const bool keep = index == 0;
    if (keep) out.metrics.push_back(world.metrics());
    for (long k = 0; k < ticks; ++k) {
      world.step();
      const MetricsRow row = world.metrics();
      if (keep) out.metrics.push_back(row);
      if (!std::isnan(row.lambda_hat_mean)) {
        int ready = 0;
        for (const Robot& r : world.robots()) ready += r.estimate.has_value();
        out.lambda_hat_sum += row.lambda_hat_mean;
        out.lambda_true_sum += row.lambda_true;
        ++out.estimator_ticks;
        out.min_ready_robots = out.min_ready_robots < 0 ? ready : std::min(out.min_ready_robots, ready);
      }
    }
    const auto& events = world.events();
    out.intervals = inter_encounter_intervals(events, spec.warmup);
    out.resolutions = resolution_times(events, spec.warmup);
    out.searches = search_durations(events, spec.warmup);
    if (keep) out.events = events;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

template <typename T>
void append(std::vector<T>& into, const std::vector<T>& from) {
  into.insert(into.end(), from.begin(), from.end());
}

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

bool wants(const ExperimentSpec& spec, AnalysisKind kind) {
  return std::find(spec.analyses.begin(), spec.analyses.end(), kind) != spec.analyses.end();
}

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

// Per-tick density trace of one replica plus its event totals.
struct DensityTrace {
  bool ok{true};
  std::string error;
  std::vector<double> lambda;
  std::vector<double> lambda_hat;
  EventCounters counters;
  std::vector<MetricsRow> metrics;  // replica 0 only
};

DensityTrace run_density_trace(int index, const SimConfig& config) {
  DensityTrace out;
  try {
    World world(config);
    const auto ticks = static_cast<long>(std::llround(config.total_time / config.tick_dt));
    out.lambda.reserve(static_cast<std::size_t>(ticks) + 1);
    for (long k = 0; k <= ticks; ++k) {
      if (k > 0) world.step();
      const MetricsRow row = world.metrics();
      out.lambda.push_back(row.lambda_true);
      out.lambda_hat.push_back(row.lambda_hat_mean);
      if (index == 0) out.metrics.push_back(row);
    }
    out.counters = world.counters();
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace

ExperimentSpec default_spec(AnalysisKind kind) {
  ExperimentSpec spec;
  spec.sim.params = reference_params();
  spec.sim.seed = 1;
  spec.analyses = {kind};
  spec.outputs = std::filesystem::path("out") / std::string(to_string(kind));
  spec.name = std::string(to_string(kind));
  SimConfig& sim = spec.sim;
  switch (kind) {
    case AnalysisKind::EncounterFit:
    case AnalysisKind::ResolutionFit:
      // lambda = 0.99 on a 20 x 20 domain.
      sim.width = sim.height = 20;
      sim.initial_robot_count = 396;
      sim.total_time = 100;
      sim.estimator_l = 50;
      spec.analyses = {AnalysisKind::EncounterFit, AnalysisKind::ResolutionFit};
      spec.name = "validate-encounters";
      spec.outputs = "out/validate-encounters";
      break;
    case AnalysisKind::TaskFit:
      sim.width = sim.height = 40;
      sim.initial_robot_count = 1;
      sim.total_time = 22000;
      spec.warmup = 0;
      spec.metrics_every = 500;
      break;
    case AnalysisKind::EstimatorBias:
      sim.width = sim.height = 20;
      sim.initial_robot_count = 396;
      sim.estimator_l = 50;
      sim.total_time = 150;
      break;
    case AnalysisKind::ClosedLoop: {
      sim.params.lambda_in = 0.01;
      sim.width = sim.height = 10;
      sim.total_time = 500;
      sim.estimator_l = 20;
      sim.record_events = false;
      spec.replicas = 20;
      spec.metrics_every = 50;
      ControllerConfigd c;
      c.lambda_star = resolve_lambda_star(spec);
      c.k_p = 0.03;
      c.dt = 0.1;
      c.lambda_in = sim.params.lambda_in;
      sim.controller = c;
      sim.initial_robot_count = static_cast<int>(std::llround(2.0 * c.lambda_star * sim.area()));
      break;
    }
    case AnalysisKind::ThroughputCurve:
    case AnalysisKind::OptimalDensity:
      sim.total_time = 0;
      break;
  }
  return spec;
}

std::vector<AnalysisReport> run_experiment(const ExperimentSpec& spec, bool write_outputs) {
  spec.validate();
  std::vector<AnalysisReport> reports;
  const bool sampled = wants(spec, AnalysisKind::EncounterFit) || wants(spec, AnalysisKind::ResolutionFit) ||
                       wants(spec, AnalysisKind::TaskFit) || wants(spec, AnalysisKind::EstimatorBias) ||
                       spec.analyses.empty();
  if (write_outputs) ensure_directory(spec.outputs);

  if (sampled) {
    const std::function<ReplicaSamples(int, const SimConfig&)> fn = [&spec](int i, const SimConfig& c) {
      return run_sampled_replica(spec, i, c);
    };
    const auto replicas = run_replicas(spec.sim, spec.replicas, fn);

    ReplicaSamples all;
    int failed = 0;
    std::vector<std::string> failures;
    for (std::size_t i = 0; i < replicas.size(); ++i) {
      const ReplicaSamples& r = replicas[i];
      if (!r.ok) {
        ++failed;
        failures.push_back("replica " + std::to_string(i) + " failed: " + r.error);
        continue;
      }
      append(all.intervals, r.intervals);
      append(all.resolutions, r.resolutions);
      append(all.searches, r.searches);
      all.lambda_hat_sum += r.lambda_hat_sum;
      all.lambda_true_sum += r.lambda_true_sum;
      all.estimator_ticks += r.estimator_ticks;
      if (r.min_ready_robots >= 0) {
        all.min_ready_robots =
            all.min_ready_robots < 0 ? r.min_ready_robots : std::min(all.min_ready_robots, r.min_ready_robots);
      }
    }
    const SwarmParamsd& p = spec.sim.params;
    const double lambda = static_cast<double>(spec.sim.initial_robot_count) / spec.sim.area();
    const auto mark = [&](AnalysisReport& report) {
      report.partial = failed > 0;
      report.notes = failures;
      report.add("replicas_ok", static_cast<double>(replicas.size() - static_cast<std::size_t>(failed)));
    };

    if (wants(spec, AnalysisKind::EncounterFit)) {
      AnalysisReport report{"encounter-fit", {}, {}, false};
      const double rate = encounter_rate(p, lambda);
      report.add("samples", static_cast<double>(all.intervals.size()), Comparison::AtLeast, kEncounterMinSamples);
      report.add("theory_mean", 1.0 / rate);
      if (!all.intervals.empty() && rate > 0) {
        const double m = mean_of(all.intervals);
        report.add("mean", m);
        report.add("mean_rel_error", relative_error(m, 1.0 / rate), Comparison::AtMost, kEncounterMeanTol);
        report.add("ks_distance_theory", ks_distance_exponential(all.intervals, rate), Comparison::AtMost,
                   kEncounterKsTol);
        if (write_outputs) {
          write_file(spec.outputs / "encounter_hist.csv", [&](std::ostream& os) {
            write_histogram_csv(os, exponential_histogram(all.intervals, rate, spec.histogram_bins));
          });
        }
      } else {
        report.partial = true;
      }
      mark(report);
      reports.push_back(std::move(report));
    }

    if (wants(spec, AnalysisKind::ResolutionFit)) {
      AnalysisReport report{"resolution-fit", {}, {}, false};
      report.add("samples", static_cast<double>(all.resolutions.size()), Comparison::AtLeast,
                 kResolutionMinSamples);
      if (!all.resolutions.empty()) {
        const ExponentialFit fit = fit_exponential_rate(all.resolutions);
        report.add("fitted_rho", fit.rate);
        report.add("mean", fit.mean);
        report.add("ks_distance_fit", fit.ks_distance, Comparison::AtMost, kResolutionKsTol);
        if (write_outputs) {
          write_file(spec.outputs / "resolution_hist.csv", [&](std::ostream& os) {
            write_histogram_csv(os, exponential_histogram(all.resolutions, fit.rate, spec.histogram_bins));
          });
        }
      } else {
        report.partial = true;
      }
      mark(report);
      reports.push_back(std::move(report));
    }

    if (wants(spec, AnalysisKind::TaskFit)) {
      AnalysisReport report{"task-fit", {}, {}, false};
      const double omega_p = task_rates(p).first;
      report.add("samples", static_cast<double>(all.searches.size()), Comparison::AtLeast, kTaskMinSamples);
      report.add("theory_mean", 1.0 / omega_p);
      if (!all.searches.empty()) {
        const double m = mean_of(all.searches);
        report.add("mean", m);
        report.add("mean_rel_error", relative_error(m, 1.0 / omega_p), Comparison::AtMost, kTaskMeanTol);
        report.add("ks_distance_theory", ks_distance_exponential(all.searches, omega_p));
        if (write_outputs) {
          write_file(spec.outputs / "task_hist.csv", [&](std::ostream& os) {
            write_histogram_csv(os, exponential_histogram(all.searches, omega_p, spec.histogram_bins));
          });
        }
      } else {
        report.partial = true;
      }
      mark(report);
      reports.push_back(std::move(report));
    }

    if (wants(spec, AnalysisKind::EstimatorBias)) {
      AnalysisReport report{"estimator-bias", {}, {}, false};
      report.add("min_ready_robots", all.min_ready_robots, Comparison::AtLeast, kEstimatorMinRobots);
      report.add("expected_window_count", encounter_rate(p, lambda) * spec.sim.estimator_l, Comparison::AtLeast,
                 kEstimatorMinCounts);
      report.add("ticks", static_cast<double>(all.estimator_ticks));
      if (all.estimator_ticks > 0) {
        const double ticks = static_cast<double>(all.estimator_ticks);
        const double hat = all.lambda_hat_sum / ticks;
        const double truth = all.lambda_true_sum / ticks;
        report.add("lambda_true", truth);
        report.add("lambda_hat_mean", hat);
        report.add("rel_error", relative_error(hat, truth), Comparison::AtMost, kEstimatorTol);
      } else {
        report.partial = true;
        report.notes.push_back("no tick had a ready estimate; total_time must exceed estimator_l");
      }
      mark(report);
      reports.push_back(std::move(report));
    }

    if (write_outputs && !replicas.empty() && replicas.front().ok) {
      if (spec.sim.record_events) {
        write_file(spec.outputs / "events.csv", [&](std::ostream& os) { write_events_csv(os, replicas.front().events); });
      }
      write_file(spec.outputs / "metrics.csv",
                 [&](std::ostream& os) { write_metrics_csv(os, thin(replicas.front().metrics, spec.metrics_every)); });
    }
  }

  if (wants(spec, AnalysisKind::ClosedLoop)) reports.push_back(closed_loop_experiment(spec, write_outputs));
  if (wants(spec, AnalysisKind::ThroughputCurve)) reports.push_back(throughput_curve_analysis(spec, write_outputs));
  if (wants(spec, AnalysisKind::OptimalDensity)) reports.push_back(optimal_density_analysis(spec));

  if (write_outputs) {
    write_file(spec.outputs / "report.csv", [&](std::ostream& os) { write_report(os, reports); });
  }
  return reports;
}

AnalysisReport closed_loop_experiment(const ExperimentSpec& spec, bool write_outputs) {
  spec.validate();
  if (!spec.sim.controller) throw InvalidInput("closed-loop: controller must be enabled");
  const ControllerConfigd ctrl = *spec.sim.controller;
  if (!(ctrl.lambda_star > 0)) {
    throw InvalidInput("closed-loop: lambda* = 0 is the degenerate case; no robots should be deployed");
  }
  const double area = spec.sim.area();
  const double lambda0 = static_cast<double>(spec.sim.initial_robot_count) / area;
  if (!(lambda0 > ctrl.lambda_star)) throw InvalidInput("closed-loop: initial density must exceed lambda*");

  AnalysisReport report{"closed-loop", {}, {}, false};
  const std::function<DensityTrace(int, const SimConfig&)> fn = run_density_trace;

  // Regulation with the controller on.
  const auto traces = run_replicas(spec.sim, spec.replicas, fn);
  const double dt = spec.sim.tick_dt;
  std::size_t length = 0;
  std::vector<double> finals;
  long retreats = 0;
  long entries = 0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    if (!traces[i].ok) {
      report.partial = true;
      report.notes.push_back("replica " + std::to_string(i) + " failed: " + traces[i].error);
      continue;
    }
    length = traces[i].lambda.size();
  }
  std::vector<double> mean_trace(length, 0.0);
  std::vector<double> hat_trace(length, 0.0);
  std::vector<int> hat_ready(length, 0);
  int ok = 0;
  for (const DensityTrace& tr : traces) {
    if (!tr.ok) continue;
    ++ok;
    for (std::size_t k = 0; k < length; ++k) {
      mean_trace[k] += tr.lambda[k];
      if (!std::isnan(tr.lambda_hat[k])) {
        hat_trace[k] += tr.lambda_hat[k];
        ++hat_ready[k];
      }
    }
    const std::size_t from = length - length / 3;
    double sum = 0;
    for (std::size_t k = from; k < length; ++k) sum += tr.lambda[k];
    finals.push_back(sum / static_cast<double>(length - from));
    retreats += tr.counters.retreats;
    entries += tr.counters.entries;
  }
  if (ok == 0) {
    report.partial = true;
    return report;
  }
  for (double& x : mean_trace) x /= ok;
  for (std::size_t k = 0; k < length; ++k) hat_trace[k] = hat_ready[k] > 0 ? hat_trace[k] / hat_ready[k] : NAN;

  const double regulated = mean_of(finals);
  report.add("lambda_star", ctrl.lambda_star);
  report.add("lambda0", lambda0);
  report.add("replicas_ok", ok);
  report.add("final_third_lambda", regulated);
  report.add("regulation_rel_error", relative_error(regulated, ctrl.lambda_star), Comparison::AtMost,
             kRegulationTol);
  int within = 0;
  for (double f : finals) within += relative_error(f, ctrl.lambda_star) <= kRegulationTol;
  report.add("replicas_within_tol", within);

  // Ensemble ODE reference and the retreat flux epsilon * lambda * |D|, at the true and the estimated density.
  const auto ode = integrate_ensemble(ctrl, lambda0, spec.sim.total_time, dt);
  double divergence = 0;
  double predicted_retreats = 0;
  double predicted_from_estimate = 0;
  const std::size_t n = std::min(ode.size(), mean_trace.size());
  for (std::size_t k = 0; k < n; ++k) {
    divergence += std::abs(mean_trace[k] - ode[k].lambda);
    if (k + 1 == n) continue;
    predicted_retreats += epsilon(ctrl, mean_trace[k]) * mean_trace[k] * area * dt;
    if (!std::isnan(hat_trace[k])) predicted_from_estimate += epsilon(ctrl, hat_trace[k]) * mean_trace[k] * area * dt;
  }
  double hat_final = 0;
  double true_final = 0;
  for (std::size_t k = n - n / 3; k < n; ++k) {
    if (std::isnan(hat_trace[k])) continue;
    hat_final += hat_trace[k];
    true_final += mean_trace[k];
  }
  report.add("ode_mean_abs_divergence", n > 0 ? divergence / static_cast<double>(n) : 0.0);
  if (true_final > 0) report.add("final_third_estimate_ratio", hat_final / true_final);
  report.add("retreats_per_replica", static_cast<double>(retreats) / ok);
  report.add("predicted_retreats_per_replica", predicted_retreats);
  report.add("predicted_retreats_from_estimate", predicted_from_estimate);
  report.add("entries_per_replica", static_cast<double>(entries) / ok);

  // Controller disabled: density must grow at lambda_in.
  std::vector<double> open_trace;
  if (spec.sim.params.lambda_in > 0) {
    SimConfig open = spec.sim;
    open.controller.reset();
    open.record_events = false;
    open.initial_robot_count = static_cast<int>(std::llround(ctrl.lambda_star * area));
    const auto open_runs = run_replicas(open, spec.replicas, fn);
    int open_ok = 0;
    for (const DensityTrace& tr : open_runs) {
      if (!tr.ok) {
        report.partial = true;
        continue;
      }
      if (open_trace.empty()) open_trace.assign(tr.lambda.size(), 0.0);
      for (std::size_t k = 0; k < open_trace.size(); ++k) open_trace[k] += tr.lambda[k];
      ++open_ok;
    }
    for (double& x : open_trace) x /= std::max(open_ok, 1);
    std::vector<double> times(open_trace.size());
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = dt * static_cast<double>(k);
    const double growth = slope(times, open_trace);
    report.add("open_loop_growth", growth);
    report.add("open_loop_growth_rel_error", relative_error(growth, spec.sim.params.lambda_in), Comparison::AtMost,
               kGrowthTol);
  } else {
    report.notes.push_back("lambda_in = 0: open-loop growth check skipped");
  }

  if (write_outputs) {
    ensure_directory(spec.outputs);
    write_file(spec.outputs / "closed_loop.csv", [&](std::ostream& os) {
      os << "t,lambda_mean,lambda_ode,lambda_open_loop_mean\n";
      os.precision(12);
      for (std::size_t k = 0; k < mean_trace.size(); k += static_cast<std::size_t>(spec.metrics_every)) {
        os << dt * static_cast<double>(k) << ',' << mean_trace[k] << ',' << (k < ode.size() ? ode[k].lambda : NAN)
           << ',';
        if (k < open_trace.size()) os << open_trace[k];
        os << '\n';
      }
    });
    if (!traces.empty() && traces.front().ok) {
      write_file(spec.outputs / "metrics.csv",
                 [&](std::ostream& os) { write_metrics_csv(os, thin(traces.front().metrics, spec.metrics_every)); });
    }
  }
  return report;
}

AnalysisReport throughput_curve_analysis(const ExperimentSpec& spec, bool write_outputs) {
  const CtmcConfig<double> config = spec.ctmc();
  config.validate();
  AnalysisReport report{"throughput-curve", {}, {}, false};
  const int points = spec.curve_points;
  std::vector<double> lambdas(static_cast<std::size_t>(points));
  std::vector<CtmcSolution<double>> solutions;
  solutions.reserve(lambdas.size());
  for (int i = 0; i < points; ++i) {
    lambdas[static_cast<std::size_t>(i)] = spec.lambda_max * i / (points - 1);
    solutions.push_back(steady_state(build_generator(config, lambdas[static_cast<std::size_t>(i)])));
  }
  int decreasing = 0;
  int convex = 0;
  std::vector<double> q(lambdas.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = lambdas[i] * solutions[i].per_robot_delivery_rate;
  for (std::size_t i = 1; i < q.size(); ++i) decreasing += q[i] < q[i - 1] - 1e-12;
  for (std::size_t i = 1; i + 1 < q.size(); ++i) convex += q[i + 1] - 2 * q[i] + q[i - 1] > 1e-12;
  const double asymptote = throughput_asymptote(config);
  report.add("points", points);
  report.add("monotonicity_violations", decreasing, Comparison::Equal, 0);
  report.add("concavity_violations", convex, Comparison::Equal, 0);
  report.add("asymptote", asymptote);
  report.add("throughput_at_lambda_max", q.back());
  report.add("asymptote_exceeded", q.back() > asymptote, Comparison::Equal, 0);

  if (write_outputs) {
    ensure_directory(spec.outputs);
    write_file(spec.outputs / "throughput.csv", [&](std::ostream& os) {
      os << "lambda,throughput,objective,pi_search,pi_search_blocked,pi_transport,pi_transport_blocked\n";
      os.precision(12);
      for (std::size_t i = 0; i < q.size(); ++i) {
        const auto& s = solutions[i];
        os << lambdas[i] << ',' << q[i] << ',' << q[i] - config.cost_c * lambdas[i] << ',' << s.pi_search() << ','
           << s.pi_search_blocked() << ',' << s.pi_transport() << ',' << s.pi_transport_blocked() << '\n';
      }
    });
  }
  return report;
}

AnalysisReport optimal_density_analysis(const ExperimentSpec& spec) {
  const CtmcConfig<double> config = spec.ctmc();
  AnalysisReport report{"optimal-density", {}, {}, false};
  const auto opt = optimal_density(config);
  report.add("cycle_time_times_cost", cycle_time(config.params) * config.cost_c);
  switch (opt.kind) {
    case OptimumKind::Unbounded:
      report.notes.push_back("C = 0: throughput is monotone, no finite optimum");
      report.add("unbounded", 1);
      report.add("asymptote", opt.objective);
      return report;
    case OptimumKind::Degenerate:
      report.notes.push_back("degenerate case: lambda* = 0, deploying any robot lowers the net objective");
      report.add("degenerate", 1);
      break;
    case OptimumKind::Interior:
      report.add("degenerate", 0);
      break;
  }
  report.add("lambda_star", opt.lambda_star);
  report.add("lambda_star_closed_form", opt.closed_form);
  report.add("objective", opt.objective);
  report.add("closed_form_abs_error", std::abs(opt.lambda_star - opt.closed_form), Comparison::AtMost, kOptimumTol);
  return report;
}

}  // namespace swarm
