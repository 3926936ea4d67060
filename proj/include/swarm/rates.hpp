#ifndef SWARM_RATES_HPP
#define SWARM_RATES_HPP

#include <numbers>
#include <span>
#include <string>
#include <utility>

#include "swarm/errors.hpp"
#include "swarm/random.hpp"

namespace swarm {

/**
 * Physical and environmental constants of a homogeneous swarm.
 *
 * All quantities are in dimensionless simulation units; densities are per
 * unit area.
 */
template <typename Scalar>
struct SwarmParams {
  Scalar r{0.05};          ///< body radius
  Scalar delta{0.11};      ///< sensing half-width
  Scalar v{1};             ///< average speed
  Scalar lambda_p{1};      ///< pick-up site density
  Scalar lambda_d{1};      ///< drop-off site density
  Scalar lambda_in{0};     ///< robot influx per area per time
  Scalar rho{2.44};        ///< encounter resolution rate

  /// Throws InvalidInput naming the first offending field.
  void validate() const {
    if (!(delta > 0)) throw InvalidInput("delta must be > 0");
    if (!(v > 0)) throw InvalidInput("v must be > 0");
    if (!(rho > 0)) throw InvalidInput("rho must be > 0");
    if (!(lambda_p > 0)) throw InvalidInput("lambda_p must be > 0");
    if (!(lambda_d > 0)) throw InvalidInput("lambda_d must be > 0");
    if (!(lambda_in >= 0)) throw InvalidInput("lambda_in must be >= 0");
    if (!(r >= 0)) throw InvalidInput("r must be >= 0");
    if (!(r <= delta)) throw InvalidInput("r must not exceed delta");
  }

  template <typename Other>
  SwarmParams<Other> cast() const {
    return {Other(r), Other(delta), Other(v), Other(lambda_p),
            Other(lambda_d), Other(lambda_in), Other(rho)};
  }

  bool operator==(const SwarmParams&) const = default;
};

using SwarmParamsd = SwarmParams<double>;

template <typename Scalar>
struct Rates {
  Scalar v_r;
  Scalar omega_c;
  Scalar omega_p;
  Scalar omega_d;
};

/// Mean relative speed of two robots with speed v and independent uniform headings.
template <typename Scalar>
constexpr Scalar relative_speed(Scalar v) {
  return Scalar(4) / std::numbers::pi_v<Scalar> * v;
}

/// Area swept per unit density per unit time, c = 4 delta v_r.
template <typename Scalar>
constexpr Scalar encounter_coefficient(const SwarmParams<Scalar>& params) {
  return relative_speed(params.v) * Scalar(4) * params.delta;
}

/// Expected robot-robot encounters per unit time at density lambda.
template <typename Scalar>
Scalar encounter_rate(const SwarmParams<Scalar>& params, Scalar lambda) {
  if (!(lambda >= 0)) throw InvalidInput("encounter_rate: lambda must be >= 0");
  return relative_speed(params.v) * Scalar(4) * params.delta * lambda;
}

/// Pick-up and drop-off site encounter rates (omega_p, omega_d).
template <typename Scalar>
std::pair<Scalar, Scalar> task_rates(const SwarmParams<Scalar>& params) {
  const Scalar swept = Scalar(2) * params.delta * params.v;
  return {swept * params.lambda_p, swept * params.lambda_d};
}

template <typename Scalar>
Rates<Scalar> evaluate_rates(const SwarmParams<Scalar>& params, Scalar lambda) {
  const auto [op, od] = task_rates(params);
  return {relative_speed(params.v), encounter_rate(params, lambda), op, od};
}

/// Inverse-CDF exponential draw. Throws InvalidInput unless rate > 0.
double sample_exponential(Rng& rng, double rate);

/// Poisson draw by counting unit-rate exponential arrivals in [0, mean].
/// O(mean) work; intended for the moderate means used by site scattering and tests.
long sample_poisson(Rng& rng, double mean);

struct ExponentialFit {
  double rate;          ///< maximum-likelihood rate, 1 / sample mean
  double mean;
  double ks_distance;   ///< sup |F_n - F_fit|
  std::size_t samples;
};

/// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of
/// `samples` and an exponential CDF with the given rate.
double ks_distance_exponential(std::span<const double> samples, double rate);

/// Fits exp(rate) by maximum likelihood and reports the KS distance against
/// the fitted law. Samples must be nonempty and strictly positive.
ExponentialFit fit_exponential_rate(std::span<const double> samples);

}  // namespace swarm

#endif  // SWARM_RATES_HPP
