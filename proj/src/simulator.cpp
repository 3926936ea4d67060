#include "swarm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace swarm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr std::uint64_t kDynamicsStream = 0;
constexpr std::uint64_t kPickupStream = 1;
constexpr std::uint64_t kDropoffStream = 2;

Point direction(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Folds a coordinate back into [lo, hi], flipping the velocity component once
// per wall hit.
void reflect(double& x, double& dir, double lo, double hi) {
  while (x < lo || x > hi) {
    x = x < lo ? 2.0 * lo - x : 2.0 * hi - x;
    dir = -dir;
  }
}

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::EncounterStart: return "EncounterStart";
    case EventKind::EncounterEnd: return "EncounterEnd";
    case EventKind::Pickup: return "Pickup";
    case EventKind::Dropoff: return "Dropoff";
    case EventKind::Entry: return "Entry";
    case EventKind::Retreat: return "Retreat";
  }
  return "Unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (EventKind k : {EventKind::EncounterStart, EventKind::EncounterEnd, EventKind::Pickup,
                      EventKind::Dropoff, EventKind::Entry, EventKind::Retreat}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

double SimConfig::effective_turn_rate() const {
  if (turn_rate > 0) return turn_rate;
  return params.v / (std::hypot(width, height) / 4.0);
}

void SimConfig::validate() const {
  params.validate();
  if (!(width > 0) || !(height > 0)) throw InvalidInput("width and height must be > 0 (zero-area domain)");
  if (initial_robot_count < 0) throw InvalidInput("initial_robot_count must be >= 0");
  if (!(total_time >= 0)) throw InvalidInput("total_time must be >= 0");
  if (!(estimator_l > 0)) throw InvalidInput("estimator_l must be > 0");
  if (!(hysteresis >= 0)) throw InvalidInput("hysteresis must be >= 0");
  if (!(turn_rate >= 0)) throw InvalidInput("turn_rate must be >= 0");
  if (!(heading_noise >= 0)) throw InvalidInput("heading_noise must be >= 0");
  const double bound = params.delta / (4.0 * params.v);
  if (!(tick_dt > 0) || tick_dt > bound * (1.0 + 1e-12)) {
    throw InvalidInput("tick_dt must satisfy 0 < tick_dt <= delta/(4 v) = " + std::to_string(bound));
  }
  if (controller) controller->validate();
}

std::vector<Point> scatter_sites(double width, double height, double density, Rng& rng) {
  const long n = sample_poisson(rng, density * width * height);
  std::vector<Point> sites;
  sites.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) sites.emplace_back(uniform(rng, 0.0, width), uniform(rng, 0.0, height));
  return sites;
}

World::World(const SimConfig& config)
    : config_(config),
      rng_(make_rng(config.seed, kDynamicsStream)),
      encounter_distance_(2.0 * config.params.delta),
      release_distance_(2.0 * config.params.delta * (1.0 + config.hysteresis)) {
  config_.validate();
  Rng pickup_rng = make_rng(config.seed, kPickupStream);
  Rng dropoff_rng = make_rng(config.seed, kDropoffStream);
  pickup_sites_ = scatter_sites(config.width, config.height, config.params.lambda_p, pickup_rng);
  dropoff_sites_ = scatter_sites(config.width, config.height, config.params.lambda_d, dropoff_rng);
  const double site_cell = std::max(config.params.delta, 1e-3);
  pickup_index_ = SpatialGrid(config.width, config.height, site_cell);
  pickup_index_.rebuild(pickup_sites_);
  dropoff_index_ = SpatialGrid(config.width, config.height, site_cell);
  dropoff_index_.rebuild(dropoff_sites_);
  robot_index_ = SpatialGrid(config.width, config.height, encounter_distance_);

  robots_.reserve(static_cast<std::size_t>(config.initial_robot_count));
  for (int i = 0; i < config.initial_robot_count; ++i) {
    const Point p = random_point();
    add_robot(p, uniform(rng_, 0.0, kTwoPi));
  }
  next_arrival_ = config.params.lambda_in > 0
                      ? sample_exponential(rng_, config.params.lambda_in * config.area())
                      : std::numeric_limits<double>::infinity();
  next_decision_ = config.controller ? config.controller->dt : std::numeric_limits<double>::infinity();
}

Point World::random_point() {
  const double x = uniform(rng_, 0.0, config_.width);
  const double y = uniform(rng_, 0.0, config_.height);
  return {x, y};
}

double World::draw_turn_time(double now) {
  return now + sample_exponential(rng_, config_.effective_turn_rate());
}

RobotId World::add_robot(const Point& position, double heading) { return spawn(position, heading, time_); }

RobotId World::spawn(const Point& position, double heading, double t) {
  Robot robot;
  robot.id = next_id_++;
  robot.position = position;
  robot.heading = heading;
  robot.entered_at = t;
  robot.next_turn = draw_turn_time(t);
  robot.window = EncounterWindow(config_.estimator_l, t);
  robots_.push_back(std::move(robot));
  index_dirty_ = true;
  return robots_.back().id;
}

const Robot* World::find_robot(RobotId id) const {
  const auto it = std::lower_bound(robots_.begin(), robots_.end(), id,
                                   [](const Robot& r, RobotId key) { return r.id < key; });
  return it != robots_.end() && it->id == id ? &*it : nullptr;
}

Robot& World::robot_at(RobotId id) { return const_cast<Robot&>(*find_robot(id)); }

void World::log(double t, EventKind kind, RobotId robot, std::optional<RobotId> partner) {
  if (config_.record_events) events_.push_back({t, kind, robot, partner});
}

void World::rebuild_index() const {
  if (!index_dirty_) return;
  positions_.resize(robots_.size());
  for (std::size_t i = 0; i < robots_.size(); ++i) positions_[i] = robots_[i].position;
  robot_index_.rebuild(positions_);
  index_dirty_ = false;
}

std::vector<RobotId> World::neighbor_query(const Point& position, double radius) const {
  rebuild_index();
  std::vector<RobotId> ids;
  for (std::size_t i : robot_index_.query(position, radius)) ids.push_back(robots_[i].id);
  return ids;
}

std::vector<RobotId> brute_force_neighbors(const World& world, const Point& position, double radius) {
  std::vector<RobotId> ids;
  for (const Robot& r : world.robots()) {
    if ((r.position - position).squaredNorm() <= radius * radius) ids.push_back(r.id);
  }
  return ids;
}

void World::step(double dt) {
  if (!(dt > 0)) throw InvalidInput("step: dt must be > 0");
  const double t0 = time_;
  const double t = t0 + dt;
  move_robots(t0, dt);
  track_separation(t0, dt);
  detect_encounters(t);
  record_partner_counts(t);
  end_encounters(t);
  record_partner_counts(t);
  perform_tasks(t);
  admit_influx(t);
  run_control(t);
  time_ = t;
}

void World::move_robots(double t0, double dt) {
  const double w = config_.width;
  const double h = config_.height;
  const double stride = config_.params.v * dt;
  std::vector<RobotId> exited;
  for (Robot& r : robots_) {
    if (r.retreating) {
      r.position += stride * direction(r.heading);
      const Point& p = r.position;
      if (p.x() <= 0 || p.x() >= w || p.y() <= 0 || p.y() >= h) exited.push_back(r.id);
      continue;
    }
    if (t0 >= r.next_turn) {
      // Escape headings are held for the whole encounter.
      if (!r.avoiding()) r.heading = uniform(rng_, 0.0, kTwoPi);
      r.next_turn = draw_turn_time(t0);
    }
    Point dir = direction(r.heading);
    r.position += stride * dir;
    reflect(r.position.x(), dir.x(), 0.0, w);
    reflect(r.position.y(), dir.y(), 0.0, h);
    r.heading = std::atan2(dir.y(), dir.x());
  }
  for (RobotId id : exited) {
    drop_robot_encounters(id, t0 + dt);
    log(t0 + dt, EventKind::Retreat, id);
    ++counters_.retreats;
    robots_.erase(std::find_if(robots_.begin(), robots_.end(), [id](const Robot& r) { return r.id == id; }));
  }
  index_dirty_ = true;
}

void World::drop_robot_encounters(RobotId id, double t) {
  for (auto it = encounters_.begin(); it != encounters_.end();) {
    const Encounter& e = it->second;
    if (e.a != id && e.b != id) {
      ++it;
      continue;
    }
    log(t, EventKind::EncounterEnd, e.a, e.b);
    log(t, EventKind::EncounterEnd, e.b, e.a);
    const RobotId other = e.a == id ? e.b : e.a;
    Robot& partner = robot_at(other);
    --partner.partners;
    partner.window.record_partner_count(t, partner.partners);
    it = encounters_.erase(it);
  }
}

void World::track_separation(double t0, double dt) {
  for (auto& [key, e] : encounters_) {
    const double d = (find_robot(e.a)->position - find_robot(e.b)->position).norm();
    if (d > release_distance_) {
      if (!e.separated_at) {
        double frac = 1.0;
        if (e.last_distance <= release_distance_ && d > e.last_distance) {
          frac = (release_distance_ - e.last_distance) / (d - e.last_distance);
        }
        e.separated_at = t0 + std::clamp(frac, 0.0, 1.0) * dt;
      }
    } else {
      e.separated_at.reset();
    }
    e.last_distance = d;
  }
}

void World::detect_encounters(double t) {
  rebuild_index();
  std::vector<Point> push(robots_.size(), Point::Zero());
  std::vector<char> pushed(robots_.size(), 0);
  std::vector<std::size_t> near;
  const double overlap = 2.0 * config_.params.r;
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    near.clear();
    robot_index_.query(robots_[i].position, encounter_distance_, near);
    for (std::size_t j : near) {
      if (j <= i) continue;
      Robot& a = robots_[i];
      Robot& b = robots_[j];
      const auto key = std::make_pair(a.id, b.id);
      if (encounters_.contains(key)) continue;
      const Point gap = a.position - b.position;
      const double d = gap.norm();
      if (d < overlap) ++counters_.overlaps;
      const double hold = t + sample_exponential(rng_, config_.params.rho);
      encounters_.emplace(key, Encounter{a.id, b.id, t, hold, d, std::nullopt});
      log(t, EventKind::EncounterStart, a.id, b.id);
      log(t, EventKind::EncounterStart, b.id, a.id);
      ++counters_.encounters;
      ++a.partners;
      ++b.partners;
      const Point unit = d > 0 ? Point(gap / d) : direction(uniform(rng_, 0.0, kTwoPi));
      push[i] += unit;
      push[j] -= unit;
      pushed[i] = pushed[j] = 1;
    }
  }
  for (std::size_t i = 0; i < robots_.size(); ++i) {
    Robot& r = robots_[i];
    if (!pushed[i] || r.retreating) continue;
    const double base = push[i].squaredNorm() > 0 ? std::atan2(push[i].y(), push[i].x())
                                                   : uniform(rng_, 0.0, kTwoPi);
    r.heading = base + uniform(rng_, -config_.heading_noise, config_.heading_noise);
  }
}

void World::end_encounters(double t) {
  for (auto it = encounters_.begin(); it != encounters_.end();) {
    const Encounter& e = it->second;
    if (e.hold_until > t || !e.separated_at) {
      ++it;
      continue;
    }
    const double end = std::max(e.hold_until, *e.separated_at);
    log(end, EventKind::EncounterEnd, e.a, e.b);
    log(end, EventKind::EncounterEnd, e.b, e.a);
    --robot_at(e.a).partners;
    --robot_at(e.b).partners;
    it = encounters_.erase(it);
  }
}

void World::record_partner_counts(double t) {
  for (Robot& r : robots_) r.window.record_partner_count(t, r.partners);
}

namespace {

// Releases the latch once the robot is outside the site's disk.
void release_site(std::optional<std::size_t>& used, std::span<const Point> sites, const Point& p, double reach) {
  if (used && (sites[*used] - p).squaredNorm() > reach * reach) used.reset();
}

std::optional<std::size_t> usable_site(const SpatialGrid& index, const Point& p, double reach,
                                       const std::optional<std::size_t>& used, std::vector<std::size_t>& scratch) {
  scratch.clear();
  index.query(p, reach, scratch);
  for (std::size_t i : scratch) {
    if (i != used) return i;
  }
  return std::nullopt;
}

}  // namespace

void World::perform_tasks(double t) {
  const double reach = config_.params.delta;
  std::vector<std::size_t> scratch;
  for (Robot& r : robots_) {
    release_site(r.used_pickup, pickup_sites_, r.position, reach);
    release_site(r.used_dropoff, dropoff_sites_, r.position, reach);
    if (r.avoiding() || r.retreating) continue;
    if (r.mode == RobotMode::Searching) {
      if (const auto site = usable_site(pickup_index_, r.position, reach, r.used_pickup, scratch)) {
        r.used_pickup = site;
        r.mode = RobotMode::Carrying;
        log(t, EventKind::Pickup, r.id);
        ++counters_.pickups;
      }
    } else if (const auto site = usable_site(dropoff_index_, r.position, reach, r.used_dropoff, scratch)) {
      r.used_dropoff = site;
      r.mode = RobotMode::Searching;
      log(t, EventKind::Dropoff, r.id);
      ++counters_.dropoffs;
    }
  }
}

void World::admit_influx(double t) {
  if (!(config_.params.lambda_in > 0)) return;
  const double w = config_.width;
  const double h = config_.height;
  const double rate = config_.params.lambda_in * config_.area();
  while (next_arrival_ <= t) {
    // Walk the perimeter counter-clockwise from the origin.
    double s = uniform(rng_, 0.0, 2.0 * (w + h));
    Point p;
    double inward;
    if (s < w) {
      p = {s, 0.0};
      inward = std::numbers::pi / 2;
    } else if ((s -= w) < h) {
      p = {w, s};
      inward = std::numbers::pi;
    } else if ((s -= h) < w) {
      p = {w - s, h};
      inward = -std::numbers::pi / 2;
    } else {
      p = {0.0, h - (s - w)};
      inward = 0.0;
    }
    const double heading = inward + uniform(rng_, -std::numbers::pi / 2, std::numbers::pi / 2);
    const RobotId id = spawn(p, heading, t);
    log(next_arrival_, EventKind::Entry, id);
    ++counters_.entries;
    next_arrival_ += sample_exponential(rng_, rate);
  }
}

void World::run_control(double t) {
  const double horizon = config_.estimator_l;
  for (Robot& r : robots_) {
    const auto y = r.window.windowed_count(t);
    if (y) {
      r.estimate = mle_density(*y, config_.params, horizon, t);
    } else {
      r.estimate.reset();
    }
  }
  if (!config_.controller) return;
  const ControllerConfigd& ctrl = *config_.controller;
  const double w = config_.width;
  const double h = config_.height;
  while (next_decision_ <= t + 1e-9 * ctrl.dt) {
    for (Robot& r : robots_) {
      if (r.retreating) continue;
      const RetreatDecision decision = decide(ctrl, r.estimate, rng_);
      if (decision.action != RetreatAction::Retreat) continue;
      r.retreating = true;
      // Shortest way out: straight at the nearest wall.
      const Point& p = r.position;
      const double gaps[4] = {p.x(), w - p.x(), p.y(), h - p.y()};
      const double headings[4] = {std::numbers::pi, 0.0, -std::numbers::pi / 2, std::numbers::pi / 2};
      r.heading = headings[std::min_element(gaps, gaps + 4) - gaps];
    }
    next_decision_ += ctrl.dt;
  }
}

MetricsRow World::metrics() const {
  MetricsRow row;
  row.t = time_;
  row.n_robots = static_cast<int>(robots_.size());
  row.lambda_true = true_density();
  double sum = 0.0;
  int ready = 0;
  for (const Robot& r : robots_) {
    if (r.estimate) {
      sum += r.estimate->value;
      ++ready;
    }
    if (r.avoiding()) ++row.n_avoiding;
  }
  row.lambda_hat_mean = ready > 0 ? sum / ready : std::numeric_limits<double>::quiet_NaN();
  row.dropoffs_cum = counters_.dropoffs;
  return row;
}

World init_world(const SimConfig& config) { return World(config); }

void step(World& world, double tick_dt) { world.step(tick_dt); }

RunResult run(const SimConfig& config) {
  World world(config);
  RunResult out;
  const auto ticks = static_cast<long>(std::llround(config.total_time / config.tick_dt));
  out.metrics.reserve(static_cast<std::size_t>(ticks) + 1);
  out.metrics.push_back(world.metrics());
  for (long k = 0; k < ticks; ++k) {
    world.step();
    out.metrics.push_back(world.metrics());
  }
  out.events = world.events();
  out.counters = world.counters();
  return out;
}

}  // namespace swarm
