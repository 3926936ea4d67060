#include <doctest.h>

#include <algorithm>
#include <map>
#include <numbers>
#include <set>
#include <tuple>

#include "swarm/simulator.hpp"

using namespace swarm;

namespace {

SimConfig small_config(int robots, std::uint64_t seed = 1) {
  SimConfig c;
  c.width = 10;
  c.height = 10;
  c.initial_robot_count = robots;
  c.seed = seed;
  c.total_time = 20;
  c.estimator_l = 5;
  return c;
}

// Busy scenario with influx, control and retreats.
SimConfig busy_config(std::uint64_t seed) {
  SimConfig c = small_config(300, seed);
  c.params.lambda_in = 0.2;
  ControllerConfigd ctrl;
  ctrl.lambda_star = 1.0;
  ctrl.k_p = 0.5;
  ctrl.lambda_in = c.params.lambda_in;
  ctrl.dt = 0.1;
  c.controller = ctrl;
  c.total_time = 30;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  SimConfig c = small_config(0);
  CHECK_NOTHROW(c.validate());
  c.width = 0;
  CHECK_THROWS_AS(World{c}, InvalidInput);
  c = small_config(0);
  c.tick_dt = 0.11 / 4 + 1e-3;
  try {
    c.validate();
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("0.0275") != std::string::npos);
  }
  c.tick_dt = 0.11 / 4;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("empty world") {
  World w(small_config(0));
  CHECK(w.robots().empty());
  w.step();
  CHECK(w.robots().empty());
  CHECK(w.neighbor_query({5, 5}, 100.0).empty());
  CHECK(w.true_density() == 0.0);
}

TEST_CASE("site counts are poisson with the configured intensity") {
  SimConfig c = small_config(0);
  c.width = 20;
  c.height = 20;
  double sum = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    c.seed = seed;
    sum += static_cast<double>(World(c).pickup_sites().size());
  }
  CHECK(std::abs(sum / 100 - 400) <= 60);
}

TEST_CASE("site placement is deterministic and uses one stream per role") {
  SimConfig c = small_config(0, 9);
  const World a(c);
  const World b(c);
  CHECK(std::equal(a.pickup_sites().begin(), a.pickup_sites().end(), b.pickup_sites().begin(), b.pickup_sites().end()));

  // Each role draws from its own stream, so changing one density leaves the other set untouched.
  c.params.lambda_d = 3.0;
  const World d(c);
  CHECK(std::equal(a.pickup_sites().begin(), a.pickup_sites().end(), d.pickup_sites().begin(), d.pickup_sites().end()));
  CHECK(d.dropoff_sites().size() != a.dropoff_sites().size());
  for (const Point& p : a.pickup_sites()) {
    CHECK(p.x() >= 0);
    CHECK(p.x() <= c.width);
    CHECK(p.y() >= 0);
    CHECK(p.y() <= c.height);
  }
}

TEST_CASE("single robot occupancy is uniform") {
  SimConfig c;
  c.width = 20;
  c.height = 20;
  c.initial_robot_count = 1;
  c.params.lambda_p = 1e-12;
  c.params.lambda_d = 1e-12;
  c.record_events = false;
  World w(c);
  REQUIRE(w.pickup_sites().empty());
  REQUIRE(w.dropoff_sites().empty());

  // Samples 1000 ticks apart are about one domain crossing apart.
  std::vector<long> cells(100, 0);
  const long ticks = 1000000;
  const long stride = 1000;
  bool in_bounds = true;
  for (long k = 1; k <= ticks; ++k) {
    w.step();
    const Point& p = w.robots()[0].position;
    in_bounds = in_bounds && p.x() >= 0 && p.x() <= c.width && p.y() >= 0 && p.y() <= c.height;
    if (k % stride == 0) {
      const int ix = std::min(9, static_cast<int>(p.x() / 2));
      const int iy = std::min(9, static_cast<int>(p.y() / 2));
      ++cells[static_cast<std::size_t>(iy * 10 + ix)];
    }
  }
  CHECK(in_bounds);
  const double expected = double(ticks / stride) / 100;
  double chi2 = 0;
  for (long n : cells) chi2 += (n - expected) * (n - expected) / expected;
  // 99th percentile of chi-square with 99 degrees of freedom.
  CHECK(chi2 < 134.642);
}

TEST_CASE("two robots just inside the encounter distance") {
  SimConfig c = small_config(0);
  World w(c);
  const double gap = 2 * c.params.delta - 1e-3;
  // Parallel headings keep the gap fixed through the motion phase.
  const RobotId a = w.add_robot({5.0, 5.0}, std::numbers::pi / 2);
  const RobotId b = w.add_robot({5.0 + gap, 5.0}, std::numbers::pi / 2);
  w.step();
  std::vector<SimEvent> starts;
  for (const SimEvent& e : w.events()) {
    if (e.kind == EventKind::EncounterStart) starts.push_back(e);
  }
  REQUIRE(starts.size() == 2);
  CHECK(starts[0].robot_id == a);
  CHECK(starts[0].partner_id == b);
  CHECK(starts[1].robot_id == b);
  CHECK(starts[1].partner_id == a);
  CHECK(starts[0].time == starts[1].time);
  CHECK(w.active_encounters() == 1);
  CHECK(w.find_robot(a)->avoiding());
  CHECK(w.find_robot(b)->avoiding());

  // Staying close does not start a second encounter for the same pair.
  w.step();
  CHECK(std::count_if(w.events().begin(), w.events().end(),
                      [](const SimEvent& e) { return e.kind == EventKind::EncounterStart; }) == 2);
}

TEST_CASE("run with zero duration returns only the initial snapshot") {
  SimConfig c = small_config(20);
  c.total_time = 0;
  const auto r = run(c);
  REQUIRE(r.metrics.size() == 1);
  CHECK(r.metrics[0].t == 0.0);
  CHECK(r.metrics[0].n_robots == 20);
  CHECK(r.events.empty());
}

TEST_CASE("same seed gives a bit identical event log") {
  const auto a = run(busy_config(5));
  const auto b = run(busy_config(5));
  REQUIRE_FALSE(a.events.empty());
  CHECK(a.events == b.events);
  const auto c = run(busy_config(6));
  CHECK_FALSE(a.events == c.events);
}

TEST_CASE("event log invariants under influx and retreat") {
  for (std::uint64_t seed : {1, 2, 3}) {
    CAPTURE(seed);
    const SimConfig c = busy_config(seed);
    const auto r = run(c);
    long entries = 0, retreats = 0;
    for (const SimEvent& e : r.events) {
      entries += e.kind == EventKind::Entry;
      retreats += e.kind == EventKind::Retreat;
    }
    REQUIRE(entries > 0);
    REQUIRE(retreats > 0);

    // Conservation at every tick.
    std::size_t next = 0;
    long in = 0, out = 0;
    bool conserved = true;
    for (const MetricsRow& row : r.metrics) {
      while (next < r.events.size() && r.events[next].time <= row.t + 1e-9) {
        in += r.events[next].kind == EventKind::Entry;
        out += r.events[next].kind == EventKind::Retreat;
        ++next;
      }
      conserved = conserved && row.n_robots == c.initial_robot_count + in - out;
    }
    CHECK(conserved);
    CHECK(r.counters.entries == entries);
    CHECK(r.counters.retreats == retreats);

    // Pickup and Dropoff alternate per robot, starting with Pickup; a
    // retreated robot logs nothing afterwards.
    std::map<RobotId, EventKind> last_task;
    std::set<RobotId> gone;
    bool alternates = true, silent_after_retreat = true;
    for (const SimEvent& e : r.events) {
      if (gone.count(e.robot_id)) silent_after_retreat = false;
      if (e.kind == EventKind::Retreat) gone.insert(e.robot_id);
      if (e.kind != EventKind::Pickup && e.kind != EventKind::Dropoff) continue;
      const auto it = last_task.find(e.robot_id);
      const EventKind expected = it == last_task.end() || it->second == EventKind::Dropoff ? EventKind::Pickup
                                                                                          : EventKind::Dropoff;
      alternates = alternates && e.kind == expected;
      last_task[e.robot_id] = e.kind;
    }
    CHECK(alternates);
    CHECK(silent_after_retreat);

    // Dropoffs never outnumber pickups on any prefix.
    long pickups = 0, dropoffs = 0;
    bool prefix_ok = true;
    for (const SimEvent& e : r.events) {
      pickups += e.kind == EventKind::Pickup;
      dropoffs += e.kind == EventKind::Dropoff;
      prefix_ok = prefix_ok && dropoffs <= pickups;
    }
    CHECK(prefix_ok);

    // Encounter symmetry: starts and ends come in mirrored pairs at equal times.
    std::multiset<std::tuple<double, int, RobotId, RobotId>> starts, ends;
    for (const SimEvent& e : r.events) {
      if (!e.partner_id) continue;
      auto& bucket = e.kind == EventKind::EncounterStart ? starts : ends;
      bucket.insert({e.time, 0, e.robot_id, *e.partner_id});
    }
    bool symmetric = true;
    for (const auto& [t, tag, i, j] : starts) symmetric = symmetric && starts.count({t, tag, j, i}) == 1;
    for (const auto& [t, tag, i, j] : ends) symmetric = symmetric && ends.count({t, tag, j, i}) == 1;
    CHECK(symmetric);
    CHECK(starts.size() % 2 == 0);
  }
}

TEST_CASE("retreating robots leave through the nearest wall") {
  SimConfig c = busy_config(4);
  World w(c);
  std::map<RobotId, Point> last_seen;
  for (int k = 0; k < 1500; ++k) {
    for (const Robot& r : w.robots()) last_seen[r.id] = r.position;
    const auto before = w.events().size();
    w.step();
    for (auto i = before; i < w.events().size(); ++i) {
      const SimEvent& e = w.events()[i];
      if (e.kind != EventKind::Retreat) continue;
      CHECK(w.find_robot(e.robot_id) == nullptr);
      const Point& p = last_seen[e.robot_id];
      const double gap = std::min({p.x(), c.width - p.x(), p.y(), c.height - p.y()});
      CHECK(gap <= c.params.v * c.tick_dt + 1e-12);
    }
  }
}

TEST_CASE("neighbor query equals brute force") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimConfig c = small_config(1000, seed);
    c.width = 30;
    c.height = 30;
    World w(c);
    for (int k = 0; k < 3; ++k) w.step();
    Rng rng = make_rng(seed, 99);
    for (int q = 0; q < 100; ++q) {
      const Point p{uniform(rng, 0.0, c.width), uniform(rng, 0.0, c.height)};
      const double radius = uniform(rng, 0.0, 3.0);
      CHECK(w.neighbor_query(p, radius) == brute_force_neighbors(w, p, radius));
    }
    const Robot& r = w.robots()[17];
    CHECK(w.neighbor_query(r.position, 0.0) == std::vector<RobotId>{r.id});
  }
}

TEST_CASE("robots stay inside the domain and the density matches the count") {
  World w(small_config(150, 3));
  for (int k = 0; k < 2000; ++k) {
    w.step();
    for (const Robot& r : w.robots()) {
      REQUIRE(r.position.x() >= 0);
      REQUIRE(r.position.x() <= 10);
      REQUIRE(r.position.y() >= 0);
      REQUIRE(r.position.y() <= 10);
    }
  }
  CHECK(w.true_density() == doctest::Approx(1.5));
  CHECK(w.metrics().n_robots == 150);
}
