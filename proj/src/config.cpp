#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "swarm/harness.hpp"

namespace swarm {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

class KeyValues {
 public:
  explicit KeyValues(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const std::string content = trim(line);
      if (content.empty()) continue;
      const auto eq = content.find('=');
      if (eq == std::string::npos) {
        throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
      }
      std::string key = trim(std::string_view(content).substr(0, eq));
      std::string value = trim(std::string_view(content).substr(eq + 1));
      if (key.empty()) throw InvalidInput("config line " + std::to_string(line_no) + ": empty key");
      if (values_.contains(key)) throw InvalidInput("config: duplicate key \"" + key + "\"");
      values_.emplace(std::move(key), std::move(value));
    }
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  std::string text(const std::string& key, std::string fallback) {
    const auto it = take(key);
    return it ? *it : fallback;
  }

  double number(const std::string& key) {
    const auto it = take(key);
    if (!it) throw InvalidInput("config: missing required key \"" + key + "\"");
    return to_number(key, *it);
  }

  double number(const std::string& key, double fallback) {
    const auto it = take(key);
    return it ? to_number(key, *it) : fallback;
  }

  long integer(const std::string& key, long fallback) {
    const double v = number(key, static_cast<double>(fallback));
    if (v != std::floor(v)) throw InvalidInput("config: \"" + key + "\" must be an integer");
    return static_cast<long>(v);
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const auto it = take(key);
    if (!it) return fallback;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(it->data(), it->data() + it->size(), out);
    if (ec != std::errc{} || ptr != it->data() + it->size()) {
      throw InvalidInput("config: \"" + key + "\" is not an unsigned integer: " + *it);
    }
    return out;
  }

  bool flag(const std::string& key, bool fallback) {
    const auto it = take(key);
    if (!it) return fallback;
    if (*it == "on" || *it == "true" || *it == "1" || *it == "yes") return true;
    if (*it == "off" || *it == "false" || *it == "0" || *it == "no") return false;
    throw InvalidInput("config: \"" + key + "\" must be on/off, got " + *it);
  }

  void reject_leftovers() const {
    for (const auto& [key, value] : values_) {
      if (!used_.contains(key)) throw InvalidInput("config: unknown key \"" + key + "\"");
    }
  }

 private:
  std::optional<std::string> take(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    used_.emplace(key, true);
    return it->second;
  }

  static double to_number(const std::string& key, const std::string& s) {
    double out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw InvalidInput("config: \"" + key + "\" is not a number: " + s);
    }
    return out;
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, bool> used_;
};

// Prefixes an invariant violation with the config file context.
template <typename F>
void checked(const char* what, F&& f) {
  try {
    f();
  } catch (const InvalidInput& e) {
    throw InvalidInput(std::string("config: ") + what + ": " + e.what());
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(AnalysisKind kind) {
  switch (kind) {
    case AnalysisKind::EncounterFit: return "encounter-fit";
    case AnalysisKind::ResolutionFit: return "resolution-fit";
    case AnalysisKind::TaskFit: return "task-fit";
    case AnalysisKind::EstimatorBias: return "estimator-bias";
    case AnalysisKind::ClosedLoop: return "closed-loop";
    case AnalysisKind::ThroughputCurve: return "throughput-curve";
    case AnalysisKind::OptimalDensity: return "optimal-density";
  }
  return "unknown";
}

std::optional<AnalysisKind> parse_analysis_kind(std::string_view text) {
  for (AnalysisKind k : {AnalysisKind::EncounterFit, AnalysisKind::ResolutionFit, AnalysisKind::TaskFit,
                         AnalysisKind::EstimatorBias, AnalysisKind::ClosedLoop, AnalysisKind::ThroughputCurve,
                         AnalysisKind::OptimalDensity}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  if (name.empty()) throw InvalidInput("name must not be empty");
  if (replicas < 1) throw InvalidInput("replicas must be >= 1");
  if (!(cost_c >= 0)) throw InvalidInput("cost_c must be >= 0");
  if (!(warmup >= 0)) throw InvalidInput("warmup must be >= 0");
  if (!(lambda_max > 0)) throw InvalidInput("lambda_max must be > 0");
  if (curve_points < 2) throw InvalidInput("curve_points must be >= 2");
  if (histogram_bins < 1) throw InvalidInput("histogram_bins must be >= 1");
  if (metrics_every < 1) throw InvalidInput("metrics_every must be >= 1");
  sim.validate();
  if (sim.controller && sim.controller->lambda_in != sim.params.lambda_in) {
    throw InvalidInput("controller lambda_in must equal lambda_in");
  }
}

double resolve_lambda_star(const ExperimentSpec& spec) {
  const auto opt = optimal_density(spec.ctmc());
  switch (opt.kind) {
    case OptimumKind::Interior: return opt.lambda_star;
    case OptimumKind::Degenerate: return 0.0;
    case OptimumKind::Unbounded: break;
  }
  throw InvalidInput("cost_c = 0 leaves lambda* unbounded; set cost_c > 0 or lambda_star");
}

ExperimentSpec parse_config(std::string_view text) {
  KeyValues kv(text);
  ExperimentSpec spec;
  spec.name = kv.text("name", spec.name);
  spec.replicas = static_cast<int>(kv.integer("replicas", spec.replicas));
  spec.outputs = kv.text("output", spec.outputs.string());
  spec.cost_c = kv.number("cost_c", spec.cost_c);
  spec.warmup = kv.number("warmup", spec.warmup);
  spec.lambda_max = kv.number("lambda_max", spec.lambda_max);
  spec.curve_points = static_cast<int>(kv.integer("curve_points", spec.curve_points));
  spec.histogram_bins = static_cast<int>(kv.integer("histogram_bins", spec.histogram_bins));
  spec.metrics_every = static_cast<int>(kv.integer("metrics_every", spec.metrics_every));

  const std::string analyses = kv.text("analyses", "");
  std::istringstream list(analyses);
  std::string item;
  while (std::getline(list, item, ',')) {
    const std::string name = trim(item);
    if (name.empty()) continue;
    const auto kind = parse_analysis_kind(name);
    if (!kind) throw InvalidInput("config: \"analyses\" has unknown analysis " + name);
    spec.analyses.push_back(*kind);
  }

  SwarmParamsd& p = spec.sim.params;
  p.r = kv.number("r");
  p.delta = kv.number("delta");
  p.v = kv.number("v");
  p.lambda_p = kv.number("lambda_p");
  p.lambda_d = kv.number("lambda_d");
  p.lambda_in = kv.number("lambda_in");
  p.rho = kv.number("rho");
  checked("swarm parameters", [&] { p.validate(); });

  SimConfig& sim = spec.sim;
  sim.width = kv.number("width", sim.width);
  sim.height = kv.number("height", sim.height);
  sim.seed = kv.unsigned_integer("seed", sim.seed);
  sim.tick_dt = kv.number("tick_dt", sim.tick_dt);
  sim.total_time = kv.number("total_time", sim.total_time);
  sim.estimator_l = kv.number("estimator_l", sim.estimator_l);
  sim.hysteresis = kv.number("hysteresis", sim.hysteresis);
  sim.turn_rate = kv.number("turn_rate", sim.turn_rate);
  sim.heading_noise = kv.number("heading_noise", sim.heading_noise);
  sim.record_events = kv.flag("record_events", sim.record_events);

  const bool controlled = kv.flag("controller", false);
  const bool needs_lambda_star = controlled || kv.has("initial_density_factor");
  double lambda_star = 0;
  if (kv.has("lambda_star")) {
    lambda_star = kv.number("lambda_star");
  } else if (needs_lambda_star) {
    checked("lambda_star", [&] { lambda_star = resolve_lambda_star(spec); });
  }
  if (controlled) {
    ControllerConfigd c;
    c.lambda_star = lambda_star;
    c.k_p = kv.number("k_p");
    c.dt = kv.number("controller_dt", c.dt);
    c.lambda_in = p.lambda_in;
    checked("controller", [&] { c.validate(); });
    sim.controller = c;
  } else {
    for (const char* key : {"k_p", "controller_dt"}) {
      if (kv.has(key)) throw InvalidInput(std::string("config: \"") + key + "\" requires controller = on");
    }
  }

  const int given = kv.has("initial_robot_count") + kv.has("initial_density") + kv.has("initial_density_factor");
  if (given > 1) {
    throw InvalidInput("config: give only one of initial_robot_count, initial_density, initial_density_factor");
  }
  if (kv.has("initial_robot_count")) {
    sim.initial_robot_count = static_cast<int>(kv.integer("initial_robot_count", 0));
  } else if (kv.has("initial_density")) {
    sim.initial_robot_count = static_cast<int>(std::llround(kv.number("initial_density") * sim.area()));
  } else if (kv.has("initial_density_factor")) {
    sim.initial_robot_count =
        static_cast<int>(std::llround(kv.number("initial_density_factor") * lambda_star * sim.area()));
  }

  kv.reject_leftovers();
  checked("experiment", [&] { spec.validate(); });
  return spec;
}

ExperimentSpec load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const ExperimentSpec& spec) {
  std::ostringstream os;
  const auto put = [&os](const char* key, const std::string& value) { os << key << " = " << value << '\n'; };
  const auto num = [&put](const char* key, double value) { put(key, format_number(value)); };
  put("name", spec.name);
  put("replicas", std::to_string(spec.replicas));
  put("output", spec.outputs.string());
  std::string analyses;
  for (AnalysisKind k : spec.analyses) {
    if (!analyses.empty()) analyses += ", ";
    analyses += to_string(k);
  }
  put("analyses", analyses);
  num("cost_c", spec.cost_c);
  num("warmup", spec.warmup);
  num("lambda_max", spec.lambda_max);
  put("curve_points", std::to_string(spec.curve_points));
  put("histogram_bins", std::to_string(spec.histogram_bins));
  put("metrics_every", std::to_string(spec.metrics_every));

  const SwarmParamsd& p = spec.sim.params;
  num("r", p.r);
  num("delta", p.delta);
  num("v", p.v);
  num("lambda_p", p.lambda_p);
  num("lambda_d", p.lambda_d);
  num("lambda_in", p.lambda_in);
  num("rho", p.rho);

  const SimConfig& sim = spec.sim;
  num("width", sim.width);
  num("height", sim.height);
  put("initial_robot_count", std::to_string(sim.initial_robot_count));
  put("seed", std::to_string(sim.seed));
  num("tick_dt", sim.tick_dt);
  num("total_time", sim.total_time);
  num("estimator_l", sim.estimator_l);
  num("hysteresis", sim.hysteresis);
  num("turn_rate", sim.turn_rate);
  num("heading_noise", sim.heading_noise);
  put("record_events", sim.record_events ? "on" : "off");
  put("controller", sim.controller ? "on" : "off");
  if (sim.controller) {
    num("lambda_star", sim.controller->lambda_star);
    num("k_p", sim.controller->k_p);
    num("controller_dt", sim.controller->dt);
  }
  return os.str();
}

}  // namespace swarm
