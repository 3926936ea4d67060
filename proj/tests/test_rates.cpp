#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "swarm/rates.hpp"

using namespace swarm;

namespace {

SwarmParamsd reference() { return SwarmParamsd{}; }

std::vector<double> draws(Rng& rng, double rate, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (double& x : out) x = sample_exponential(rng, rate);
  return out;
}

double mean(const std::vector<double>& xs) {
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("relative speed of two uniformly headed robots") {
  CHECK(relative_speed(1.0) == doctest::Approx(1.27324).epsilon(1e-5));
  CHECK(relative_speed(0.0) == 0.0);
  CHECK(relative_speed(std::numbers::pi) == doctest::Approx(4.0).epsilon(1e-15));

  // Independent check: average |u1 - u2| over a fine grid of heading differences.
  const int n = 200000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double phi = 2 * std::numbers::pi * (i + 0.5) / n;
    sum += 2 * std::abs(std::sin(phi / 2));
  }
  CHECK(sum / n == doctest::Approx(relative_speed(1.0)).epsilon(1e-9));
}

TEST_CASE("encounter rate at the reference parameters") {
  const auto p = reference();
  CHECK(encounter_rate(p, 0.99) == doctest::Approx(0.55462).epsilon(1e-4));
  CHECK(encounter_rate(p, 0.0) == 0.0);
  CHECK_THROWS_AS(encounter_rate(p, -1.0), InvalidInput);
}

TEST_CASE("encounter rate is relative speed times swept width times density") {
  Rng rng = make_rng(7);
  for (int i = 0; i < 1000; ++i) {
    SwarmParamsd p;
    p.delta = uniform(rng, 0.01, 1.0);
    p.v = uniform(rng, 0.0, 5.0);
    const double lambda = uniform(rng, 0.0, 10.0);
    CHECK(encounter_rate(p, lambda) == relative_speed(p.v) * 4 * p.delta * lambda);
    // Homogeneous of degree one in density.
    CHECK(encounter_rate(p, 3 * lambda) == doctest::Approx(3 * encounter_rate(p, lambda)).epsilon(1e-14));
  }
}

TEST_CASE("task rates") {
  auto p = reference();
  const auto [op, od] = task_rates(p);
  CHECK(op == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(od == doctest::Approx(0.22).epsilon(1e-12));

  p.lambda_p = 1.7;
  p.lambda_d = 1.7;
  const auto [sp, sd] = task_rates(p);
  CHECK(sp == sd);

  p.v = 0;
  const auto [zp, zd] = task_rates(p);
  CHECK(zp == 0.0);
  CHECK(zd == 0.0);

  p = reference();
  const auto [p1, d1] = task_rates(p);
  p.lambda_p *= 2.5;
  const auto [p2, d2] = task_rates(p);
  CHECK(p2 == doctest::Approx(2.5 * p1));
  CHECK(d2 == d1);
}

TEST_CASE("evaluate_rates bundles the individual formulas") {
  const auto p = reference();
  const auto r = evaluate_rates(p, 0.99);
  CHECK(r.v_r == relative_speed(p.v));
  CHECK(r.omega_c == encounter_rate(p, 0.99));
  CHECK(r.omega_p == task_rates(p).first);
  CHECK(r.omega_d == task_rates(p).second);
}

TEST_CASE("params validation names the field") {
  SwarmParamsd p;
  p.rho = 0;
  try {
    p.validate();
    FAIL("expected InvalidInput");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("rho") != std::string::npos);
  }
  p = SwarmParamsd{};
  p.delta = -1;
  CHECK_THROWS_AS(p.validate(), InvalidInput);
  CHECK_NOTHROW(SwarmParamsd{}.validate());
}

TEST_CASE("exponential sampling means") {
  Rng rng = make_rng(11);
  const auto enc = draws(rng, 0.55462, 100000);
  CHECK(mean(enc) == doctest::Approx(1.803).epsilon(0.02));
  const auto res = draws(rng, 2.44, 100000);
  CHECK(mean(res) == doctest::Approx(0.4098).epsilon(0.02));
  CHECK_THROWS_AS(sample_exponential(rng, 0.0), InvalidInput);
}

TEST_CASE("exponential sampling is deterministic per seed") {
  Rng a = make_rng(42);
  Rng b = make_rng(42);
  Rng c = make_rng(42, 1);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = sample_exponential(a, 1.3);
    CHECK(x == sample_exponential(b, 1.3));
    differs = differs || x != sample_exponential(c, 1.3);
  }
  CHECK(differs);
}

TEST_CASE("empirical CDF of draws is within KS 0.01 for many rates") {
  Rng rng = make_rng(3);
  for (double q : {0.01, 0.22, 0.55462, 1.0, 2.44, 50.0}) {
    CAPTURE(q);
    const auto xs = draws(rng, q, 100000);
    CHECK(ks_distance_exponential(xs, q) < 0.01);
  }
}

TEST_CASE("KS distance against an independent oracle") {
  std::vector<double> xs{0.3, 0.1, 2.0, 0.7};
  const double rate = 1.5;
  // sup over the sorted sample of the gaps on either side of each step.
  std::vector<double> s = xs;
  std::sort(s.begin(), s.end());
  double d = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = 1 - std::exp(-rate * s[i]);
    d = std::max({d, std::abs(f - double(i) / 4), std::abs(double(i + 1) / 4 - f)});
  }
  CHECK(ks_distance_exponential(xs, rate) == doctest::Approx(d).epsilon(1e-15));
}

TEST_CASE("exponential fit") {
  const std::vector<double> halves(10, 0.5);
  CHECK(fit_exponential_rate(halves).rate == doctest::Approx(2.0));
  const std::vector<double> two{1.0, 3.0};
  CHECK(fit_exponential_rate(two).rate == doctest::Approx(0.5));

  Rng rng = make_rng(5);
  const auto xs = draws(rng, 2.44, 100000);
  const auto fit = fit_exponential_rate(xs);
  CHECK(fit.rate == doctest::Approx(2.44).epsilon(0.02));
  CHECK(fit.ks_distance < 0.01);
  CHECK(fit.samples == xs.size());

  CHECK_THROWS_AS(fit_exponential_rate(std::vector<double>{}), InvalidInput);
  CHECK_THROWS_AS(fit_exponential_rate(std::vector<double>{1.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(fit_exponential_rate(std::vector<double>{1.0, -2.0}), InvalidInput);
}

TEST_CASE("poisson sampling mean and variance") {
  Rng rng = make_rng(9);
  const int n = 20000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(sample_poisson(rng, 12.5));
    s += k;
    s2 += k * k;
  }
  const double m = s / n;
  CHECK(m == doctest::Approx(12.5).epsilon(0.01));
  CHECK(s2 / n - m * m == doctest::Approx(12.5).epsilon(0.05));
  CHECK(sample_poisson(rng, 0.0) == 0);
}

TEST_CASE("rates templated on long double agree with double") {
  SwarmParams<long double> p = SwarmParamsd{}.cast<long double>();
  CHECK(static_cast<double>(encounter_rate(p, 0.99L)) == doctest::Approx(encounter_rate(SwarmParamsd{}, 0.99)));
}
