#ifndef SWARM_SIMULATOR_HPP
#define SWARM_SIMULATOR_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "swarm/controller.hpp"
#include "swarm/estimator.hpp"
#include "swarm/random.hpp"
#include "swarm/rates.hpp"
#include "swarm/spatial_grid.hpp"

namespace swarm {

using RobotId = std::uint64_t;

enum class RobotMode { Searching, Carrying };

enum class EventKind { EncounterStart, EncounterEnd, Pickup, Dropoff, Entry, Retreat };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct SimEvent {
  double time{0};
  EventKind kind{EventKind::Entry};
  RobotId robot_id{0};
  std::optional<RobotId> partner_id;

  bool operator==(const SimEvent&) const = default;
};

struct SimConfig {
  SwarmParamsd params;
  double width{20};
  double height{20};
  int initial_robot_count{0};
  std::uint64_t seed{1};
  double tick_dt{0.02};
  double total_time{100};
  std::optional<ControllerConfigd> controller;
  double estimator_l{50};

  /// Encounters end once the pair is farther apart than 2 delta (1 + hysteresis).
  double hysteresis{0.1};
  /// Heading redraw rate of the run-and-turn walk; 0 selects v / (diagonal / 4).
  double turn_rate{0};
  /// Half-width of the uniform jitter added to escape headings, radians.
  double heading_noise{0.1};
  bool record_events{true};

  double area() const { return width * height; }
  double effective_turn_rate() const;
  /// Throws InvalidInput naming the offending field.
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

struct Robot {
  RobotId id{0};
  Point position{Point::Zero()};
  double heading{0};
  RobotMode mode{RobotMode::Searching};
  int partners{0};           ///< robots currently in an encounter with this one
  bool retreating{false};
  double entered_at{0};
  double next_turn{0};
  EncounterWindow window{1.0};
  std::optional<DensityEstimate> estimate;
  /// Sites served on the current visit; a site is usable again once the robot leaves it.
  std::optional<std::size_t> used_pickup;
  std::optional<std::size_t> used_dropoff;

  bool avoiding() const { return partners > 0; }
};

struct MetricsRow {
  double t{0};
  int n_robots{0};
  double lambda_true{0};
  double lambda_hat_mean{0};  ///< NaN while no robot has a ready estimate
  long dropoffs_cum{0};
  int n_avoiding{0};
};

/// Running totals kept whether or not the event log is recorded.
struct EventCounters {
  long encounters{0};
  long pickups{0};
  long dropoffs{0};
  long entries{0};
  long retreats{0};
  long overlaps{0};  ///< pairs observed closer than 2r
};

/**
 * Two-dimensional simulation of the collection task.
 *
 * Robots follow a run-and-turn walk with specular reflection. A pair within
 * 2 delta starts an encounter: both turn away from each other, stop task
 * work, and hold an exp(rho) negotiation timer. The encounter ends once the
 * timer has expired and the pair is farther apart than 2 delta (1 + h).
 * Robots are processed in id order, so a seed fixes the whole run.
 */
class World {
 public:
  explicit World(const SimConfig& config);

  /// Advances one tick of length dt.
  void step(double dt);
  void step() { step(config_.tick_dt); }

  /// Places a Searching robot; returns its id. Intended for scripted scenarios.
  RobotId add_robot(const Point& position, double heading);

  /// Ids of robots within `radius` of `position`, ascending.
  std::vector<RobotId> neighbor_query(const Point& position, double radius) const;

  double time() const { return time_; }
  const SimConfig& config() const { return config_; }
  std::span<const Robot> robots() const { return robots_; }
  const Robot* find_robot(RobotId id) const;
  std::span<const Point> pickup_sites() const { return pickup_sites_; }
  std::span<const Point> dropoff_sites() const { return dropoff_sites_; }
  const std::vector<SimEvent>& events() const { return events_; }
  const EventCounters& counters() const { return counters_; }
  std::size_t active_encounters() const { return encounters_.size(); }

  double true_density() const { return static_cast<double>(robots_.size()) / config_.area(); }
  MetricsRow metrics() const;

 private:
  struct Encounter {
    RobotId a;
    RobotId b;
    double start;
    double hold_until;
    double last_distance;
    std::optional<double> separated_at;
  };

  Robot& robot_at(RobotId id);
  RobotId spawn(const Point& position, double heading, double t);
  void log(double t, EventKind kind, RobotId robot, std::optional<RobotId> partner = std::nullopt);
  void rebuild_index() const;
  Point random_point();
  double draw_turn_time(double now);

  void move_robots(double t0, double dt);
  void detect_encounters(double t);
  void track_separation(double t0, double dt);
  void end_encounters(double t);
  void perform_tasks(double t);
  void admit_influx(double t);
  void run_control(double t);
  void record_partner_counts(double t);
  void drop_robot_encounters(RobotId id, double t);

  SimConfig config_;
  Rng rng_;
  double time_{0};
  RobotId next_id_{0};
  double next_arrival_{0};
  double next_decision_{0};
  double encounter_distance_;
  double release_distance_;

  std::vector<Robot> robots_;  // ascending id
  std::vector<Point> pickup_sites_;
  std::vector<Point> dropoff_sites_;
  SpatialGrid pickup_index_;
  SpatialGrid dropoff_index_;
  std::map<std::pair<RobotId, RobotId>, Encounter> encounters_;

  mutable SpatialGrid robot_index_;
  mutable std::vector<Point> positions_;
  mutable bool index_dirty_{true};

  std::vector<SimEvent> events_;
  EventCounters counters_;
};

/// Spatial Poisson process of the given intensity over [0, width] x [0, height].
std::vector<Point> scatter_sites(double width, double height, double density, Rng& rng);

World init_world(const SimConfig& config);
void step(World& world, double tick_dt);

struct RunResult {
  std::vector<SimEvent> events;
  std::vector<MetricsRow> metrics;
  EventCounters counters;
};

/// Runs to total_time, sampling metrics after every tick (plus the initial state).
RunResult run(const SimConfig& config);

/// Exhaustive O(n) reference for neighbor_query.
std::vector<RobotId> brute_force_neighbors(const World& world, const Point& position, double radius);

}  // namespace swarm

#endif  // SWARM_SIMULATOR_HPP
