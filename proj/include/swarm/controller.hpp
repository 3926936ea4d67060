#ifndef SWARM_CONTROLLER_HPP
#define SWARM_CONTROLLER_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "swarm/estimator.hpp"
#include "swarm/random.hpp"

namespace swarm {

/// Parameters of the one-sided proportional retreat law.
template <typename Scalar>
struct ControllerConfig {
  Scalar lambda_star{0};
  Scalar k_p{1};
  Scalar dt{0.1};        ///< decision period
  Scalar lambda_in{0};

  void validate() const {
    if (!(lambda_star >= 0)) throw InvalidInput("lambda_star must be >= 0");
    if (!(k_p > 0)) throw InvalidInput("k_p must be > 0");
    if (!(dt > 0)) throw InvalidInput("controller dt must be > 0");
    if (!(lambda_in >= 0)) throw InvalidInput("lambda_in must be >= 0");
  }

  bool operator==(const ControllerConfig&) const = default;
};

using ControllerConfigd = ControllerConfig<double>;

/**
 * Leave rate per robot. Zero at or below the set point; above it the rate
 * that makes lambda_in - eps * lambda equal K_p (lambda* - lambda).
 */
template <typename Scalar>
Scalar epsilon(const ControllerConfig<Scalar>& config, Scalar lambda_hat) {
  if (!(lambda_hat > config.lambda_star)) return Scalar(0);
  return (config.lambda_in - config.k_p * (config.lambda_star - lambda_hat)) / lambda_hat;
}

/// Open-loop population dynamics lambda_in - eps(lambda) lambda.
template <typename Scalar>
Scalar population_rate(const ControllerConfig<Scalar>& config, Scalar lambda) {
  return config.lambda_in - epsilon(config, lambda) * lambda;
}

/// Closed-loop right-hand side: K_p (lambda* - lambda) above the set point, lambda_in otherwise.
template <typename Scalar>
Scalar closed_loop_rate(const ControllerConfig<Scalar>& config, Scalar lambda) {
  if (lambda > config.lambda_star) return config.k_p * (config.lambda_star - lambda);
  return config.lambda_in;
}

/// |(lambda_in - eps lambda) - K_p (lambda* - lambda)|; zero up to rounding for lambda > lambda*.
template <typename Scalar>
Scalar verify_feedback_linearization(const ControllerConfig<Scalar>& config, Scalar lambda) {
  return std::abs(population_rate(config, lambda) - config.k_p * (config.lambda_star - lambda));
}

/**
 * One step of the ensemble closed loop. Each branch is smooth, so steps that
 * stay on one side use classical RK4; a step that reaches the switching
 * surface is split at the crossing time.
 */
template <typename Scalar>
Scalar ensemble_step(const ControllerConfig<Scalar>& config, Scalar lambda, Scalar dt) {
  if (!(lambda >= 0)) throw InvalidInput("ensemble_step: lambda must be >= 0");
  if (!(dt > 0)) throw InvalidInput("ensemble_step: dt must be > 0");
  const Scalar target = config.lambda_star;

  if (lambda <= target) {
    // Constant-rate growth is integrated exactly. At the surface the lower
    // branch still applies, so the remainder of the step carries on at lambda_in.
    if (config.lambda_in <= 0) return lambda;
    const Scalar to_surface = (target - lambda) / config.lambda_in;
    if (to_surface >= dt) return lambda + config.lambda_in * dt;
    return target + config.lambda_in * (dt - to_surface);
  }

  const auto upper = [&config](Scalar x) { return config.k_p * (config.lambda_star - x); };
  const Scalar k1 = upper(lambda);
  const Scalar k2 = upper(lambda + dt / 2 * k1);
  const Scalar k3 = upper(lambda + dt / 2 * k2);
  const Scalar k4 = upper(lambda + dt * k3);
  const Scalar next = lambda + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  if (next > target) return next;
  // Overshoot through the surface only happens for K_p dt beyond RK4's
  // stability range; halve until each piece stays on the upper branch.
  const Scalar half = dt / 2;
  const Scalar mid = ensemble_step(config, lambda, half);
  return ensemble_step(config, mid, half);
}

template <typename Scalar>
struct TrajectoryPoint {
  Scalar t;
  Scalar lambda;
};

/// Integrates the ensemble closed loop from lambda0 over [0, t_end] with fixed step dt.
template <typename Scalar>
std::vector<TrajectoryPoint<Scalar>> integrate_ensemble(const ControllerConfig<Scalar>& config,
                                                        Scalar lambda0, Scalar t_end, Scalar dt) {
  std::vector<TrajectoryPoint<Scalar>> out;
  const auto steps = static_cast<long>(std::llround(t_end / dt));
  out.reserve(static_cast<std::size_t>(steps) + 1);
  Scalar lambda = lambda0;
  out.push_back({Scalar(0), lambda});
  for (long k = 1; k <= steps; ++k) {
    lambda = ensemble_step(config, lambda, dt);
    out.push_back({dt * Scalar(k), lambda});
  }
  return out;
}

enum class RetreatAction { Stay, Retreat };

struct RetreatDecision {
  RetreatAction action{RetreatAction::Stay};
  double epsilon_used{0};
  double estimate_used{0};
  bool abstained{false};  ///< estimate not ready; no coin was flipped
};

/// Flips the retreat coin with probability min(1, eps(lambda_hat) dt).
RetreatDecision decide(const ControllerConfigd& config, const std::optional<DensityEstimate>& estimate,
                       Rng& rng);

}  // namespace swarm

#endif  // SWARM_CONTROLLER_HPP
