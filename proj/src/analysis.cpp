#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "swarm/harness.hpp"

namespace swarm {

bool Metric::passed() const {
  switch (comparison) {
    case Comparison::AtMost: return value <= threshold;
    case Comparison::AtLeast: return value >= threshold;
    case Comparison::Equal: return value == threshold;
    case Comparison::Info: return true;
  }
  return false;
}

std::string Metric::tolerance_text() const {
  std::ostringstream os;
  os.precision(10);
  switch (comparison) {
    case Comparison::AtMost: os << "<=" << threshold; break;
    case Comparison::AtLeast: os << ">=" << threshold; break;
    case Comparison::Equal: os << "==" << threshold; break;
    case Comparison::Info: os << "-"; break;
  }
  return os.str();
}

bool AnalysisReport::passed() const {
  return !partial && std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.passed(); });
}

void AnalysisReport::add(std::string name, double value, Comparison comparison, double threshold) {
  metrics.push_back({std::move(name), value, comparison, threshold});
}

void write_report(std::ostream& os, std::span<const AnalysisReport> reports) {
  os << "analysis,metric,value,tolerance,pass\n";
  const auto old = os.precision(10);
  for (const AnalysisReport& r : reports) {
    for (const Metric& m : r.metrics) {
      os << r.analysis << ',' << m.name << ',' << m.value << ',' << m.tolerance_text() << ','
         << (m.comparison == Comparison::Info ? "-" : (m.passed() ? "true" : "false")) << '\n';
    }
    if (r.partial) os << r.analysis << ",partial,1,==0,false\n";
  }
  os.precision(old);
}

std::vector<double> inter_encounter_intervals(std::span<const SimEvent> events, double from) {
  std::map<RobotId, double> last;
  std::vector<double> gaps;
  for (const SimEvent& e : events) {
    if (e.kind != EventKind::EncounterStart || e.time < from) continue;
    const auto [it, fresh] = last.try_emplace(e.robot_id, e.time);
    if (!fresh) {
      gaps.push_back(e.time - it->second);
      it->second = e.time;
    }
  }
  return gaps;
}

std::vector<double> resolution_times(std::span<const SimEvent> events, double from) {
  std::map<std::pair<RobotId, RobotId>, double> open;
  std::vector<double> out;
  for (const SimEvent& e : events) {
    if (!e.partner_id || e.robot_id > *e.partner_id) continue;
    const auto key = std::make_pair(e.robot_id, *e.partner_id);
    if (e.kind == EventKind::EncounterStart) {
      open[key] = e.time;
    } else if (e.kind == EventKind::EncounterEnd) {
      const auto it = open.find(key);
      if (it == open.end()) continue;
      if (it->second >= from) out.push_back(e.time - it->second);
      open.erase(it);
    }
  }
  return out;
}

std::vector<double> search_durations(std::span<const SimEvent> events, double from) {
  std::map<RobotId, double> searching_since;
  std::vector<double> out;
  for (const SimEvent& e : events) {
    if (e.kind == EventKind::Entry) {
      searching_since[e.robot_id] = e.time;
    } else if (e.kind == EventKind::Dropoff) {
      searching_since[e.robot_id] = e.time;
    } else if (e.kind == EventKind::Pickup) {
      // Robots present from the start began searching at time zero.
      const auto [it, fresh] = searching_since.try_emplace(e.robot_id, 0.0);
      if (it->second >= from) out.push_back(e.time - it->second);
      searching_since.erase(it);
    }
  }
  return out;
}

std::vector<HistogramBin> exponential_histogram(std::span<const double> samples, double rate, int bins) {
  if (bins < 1) throw InvalidInput("exponential_histogram: bins must be >= 1");
  if (!(rate > 0)) throw InvalidInput("exponential_histogram: rate must be > 0");
  // Cover the bulk of the theoretical law (99.5%) or the data, whichever is wider.
  double upper = -std::log(0.005) / rate;
  if (!samples.empty()) upper = std::max(upper, *std::max_element(samples.begin(), samples.end()));
  const double width = upper / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int i = 0; i < bins; ++i) {
    const double a = width * i;
    const double b = width * (i + 1);
    out[static_cast<std::size_t>(i)] = {a, b, 0, (std::exp(-rate * a) - std::exp(-rate * b)) / width};
  }
  for (double s : samples) {
    const auto i = std::clamp(static_cast<int>(s / width), 0, bins - 1);
    ++out[static_cast<std::size_t>(i)].count;
  }
  return out;
}

void write_histogram_csv(std::ostream& os, std::span<const HistogramBin> bins) {
  os << "bin_left,bin_right,count,theory_density\n";
  const auto old = os.precision(12);
  for (const HistogramBin& b : bins) os << b.left << ',' << b.right << ',' << b.count << ',' << b.theory_density << '\n';
  os.precision(old);
}

void write_events_csv(std::ostream& os, std::span<const SimEvent> events) {
  os << "time,kind,robot_id,partner_id\n";
  const auto old = os.precision(17);
  for (const SimEvent& e : events) {
    os << e.time << ',' << to_string(e.kind) << ',' << e.robot_id << ',';
    if (e.partner_id) os << *e.partner_id;
    os << '\n';
  }
  os.precision(old);
}

std::vector<SimEvent> read_events_csv(std::istream& is) {
  std::vector<SimEvent> out;
  std::string line;
  if (!std::getline(is, line) || line != "time,kind,robot_id,partner_id") {
    throw InvalidInput("events csv: missing header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string time, kind, robot, partner;
    std::getline(row, time, ',');
    std::getline(row, kind, ',');
    std::getline(row, robot, ',');
    std::getline(row, partner);
    SimEvent e;
    const auto parsed = parse_event_kind(kind);
    if (!parsed) throw InvalidInput("events csv: unknown kind " + kind);
    try {
      e.time = std::stod(time);
      e.kind = *parsed;
      e.robot_id = std::stoull(robot);
      if (!partner.empty()) e.partner_id = std::stoull(partner);
    } catch (const std::logic_error&) {
      throw InvalidInput("events csv: malformed row " + line);
    }
    out.push_back(e);
  }
  return out;
}

void write_metrics_csv(std::ostream& os, std::span<const MetricsRow> rows) {
  os << "t,n_robots,lambda_true,lambda_hat_mean,dropoffs_cum,n_avoiding\n";
  const auto old = os.precision(12);
  for (const MetricsRow& r : rows) {
    os << r.t << ',' << r.n_robots << ',' << r.lambda_true << ',';
    if (!std::isnan(r.lambda_hat_mean)) os << r.lambda_hat_mean;
    os << ',' << r.dropoffs_cum << ',' << r.n_avoiding << '\n';
  }
  os.precision(old);
}

}  // namespace swarm
