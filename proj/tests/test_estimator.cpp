#include <doctest.h>

#include <algorithm>
#include <vector>

#include "swarm/estimator.hpp"

using namespace swarm;

namespace {

// Pulses the partner count to produce one onset at each time.
EncounterWindow window_with_onsets(double horizon, const std::vector<double>& times) {
  EncounterWindow w(horizon);
  for (double t : times) {
    w.record_partner_count(t, 1);
    w.record_partner_count(t, 0);
  }
  return w;
}

}  // namespace

TEST_CASE("onsets fire once per unit of strict increase") {
  EncounterWindow w(10.0);
  w.record_partner_count(5.0, 1);
  REQUIRE(w.onsets().size() == 1);
  CHECK(w.onsets().back() == 5.0);

  w.record_partner_count(7.0, 3);
  REQUIRE(w.onsets().size() == 3);
  CHECK(w.onsets()[1] == 7.0);
  CHECK(w.onsets()[2] == 7.0);

  w.record_partner_count(8.0, 2);
  w.record_partner_count(9.0, 1);
  CHECK(w.onsets().size() == 3);
  CHECK(w.current_partners() == 1);

  w.record_partner_count(9.0, 1);
  CHECK(w.onsets().size() == 3);
}

TEST_CASE("window input validation") {
  EncounterWindow w(5.0);
  w.record_partner_count(3.0, 0);
  CHECK_THROWS_AS(w.record_partner_count(2.0, 1), InvalidInput);
  CHECK_THROWS_AS(w.record_partner_count(4.0, -1), InvalidInput);
  CHECK_THROWS_AS(EncounterWindow(0.0), InvalidInput);
  CHECK_THROWS_AS(EncounterWindow(-1.0), InvalidInput);
}

TEST_CASE("windowed count") {
  CHECK(window_with_onsets(5.0, {}).windowed_count(10.0) == 0);
  CHECK(window_with_onsets(5.0, {1, 2, 9}).windowed_count(10.0) == 1);
  // Both ends of [t - L, t] are included.
  const auto w = window_with_onsets(5.0, {5, 10});
  CHECK(w.windowed_count(10.0) == 2);
}

TEST_CASE("window is not ready before a full horizon") {
  EncounterWindow w(5.0, 2.0);
  CHECK_FALSE(w.windowed_count(0.0).has_value());
  CHECK_FALSE(w.windowed_count(6.999).has_value());
  CHECK(w.windowed_count(7.0).has_value());
}

TEST_CASE("windowed count equals brute force over the full history") {
  Rng rng = make_rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const double horizon = uniform(rng, 0.5, 20.0);
    EncounterWindow w(horizon);
    std::vector<double> history;
    double t = 0;
    int partners = 0;
    for (int k = 0; k < 2000; ++k) {
      t += uniform(rng, 0.0, 0.2);
      const int next = std::max(0, partners + static_cast<int>(uniform(rng, -2.0, 3.0)));
      for (int i = partners; i < next; ++i) history.push_back(t);
      partners = next;
      w.record_partner_count(t, partners);
      if (t < horizon) continue;
      const auto got = w.windowed_count(t);
      REQUIRE(got.has_value());
      const auto expected = std::count_if(history.begin(), history.end(),
                                          [&](double s) { return s >= t - horizon && s <= t; });
      CHECK(*got == expected);
    }
    // Pruning keeps the stored stamps bounded by the window.
    for (double s : w.onsets()) CHECK(s >= t - horizon);
  }
}

TEST_CASE("mle density") {
  SwarmParamsd p;
  CHECK(mle_density(0, p, 30.0).value == 0.0);
  CHECK(mle_density(10, p, 30.0).value == doctest::Approx(0.595).epsilon(1e-3));
  CHECK(mle_density(10, p, 30.0).value == doctest::Approx(10.0 / (encounter_coefficient(p) * 30.0)));
  CHECK(mle_density(10, p, 30.0, 4.5).at_time == 4.5);
  CHECK(mle_density(10, p, 30.0).sample_count == 10);
  CHECK_THROWS_AS(mle_density(10, p, 0.0), InvalidInput);
  CHECK_THROWS_AS(mle_density(-1, p, 1.0), InvalidInput);

  // Linear in y.
  for (int y = 0; y < 50; ++y) {
    CHECK(mle_density(y, p, 12.0).value == doctest::Approx(y * mle_density(1, p, 12.0).value).epsilon(1e-14));
  }
}

TEST_CASE("mle round trip on poisson counts") {
  SwarmParamsd p;
  Rng rng = make_rng(23);
  for (double lambda : {0.3, 0.99, 2.1053}) {
    const double horizon = 30.0;
    double sum = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const long y = sample_poisson(rng, encounter_rate(p, lambda) * horizon);
      sum += mle_density(static_cast<int>(y), p, horizon).value;
    }
    CHECK(sum / n == doctest::Approx(lambda).epsilon(0.01));
  }
}

TEST_CASE("population estimate from an exponential encounter process") {
  // 60 robots, each with encounters at rate Omega_c(lambda); Omega_c L >= 20.
  SwarmParamsd p;
  const double lambda = 0.99;
  const double horizon = 50.0;
  REQUIRE(encounter_rate(p, lambda) * horizon >= 20);
  Rng rng = make_rng(4);
  double sum = 0;
  const int robots = 60;
  for (int r = 0; r < robots; ++r) {
    EncounterWindow w(horizon);
    double t = 0;
    while (true) {
      t += sample_exponential(rng, encounter_rate(p, lambda));
      if (t > 100.0) break;
      w.record_partner_count(t, 1);
      w.record_partner_count(t, 0);
    }
    sum += mle_density(*w.windowed_count(100.0), p, horizon).value;
  }
  CHECK(sum / robots == doctest::Approx(lambda).epsilon(0.10));
}
