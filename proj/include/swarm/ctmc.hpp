#ifndef SWARM_CTMC_HPP
#define SWARM_CTMC_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

#include "swarm/errors.hpp"
#include "swarm/golden_section.hpp"
#include "swarm/random.hpp"
#include "swarm/rates.hpp"

namespace swarm {

/// Behavioral states of a single robot. Values index the generator.
enum class CtmcState : int { Search = 0, SearchBlocked = 1, Transport = 2, TransportBlocked = 3 };

inline constexpr int kCtmcStates = 4;

template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, kCtmcStates, kCtmcStates>;
template <typename Scalar>
using Vector4 = Eigen::Matrix<Scalar, kCtmcStates, 1>;

constexpr int index_of(CtmcState s) { return static_cast<int>(s); }

template <typename Scalar>
struct CtmcConfig {
  SwarmParams<Scalar> params;
  Scalar cost_c{0};  ///< per-robot deployment cost, deliveries per robot per time

  void validate() const {
    params.validate();
    if (!(cost_c >= 0)) throw InvalidInput("cost_c must be >= 0");
  }
};

/// Transition-rate matrix together with the density it was built for.
template <typename Scalar>
struct GeneratorMatrix {
  Matrix4<Scalar> entries;
  Scalar lambda_used{0};
};

template <typename Scalar>
struct CtmcSolution {
  Vector4<Scalar> pi;
  Scalar per_robot_delivery_rate{0};
  Scalar lambda_used{0};

  Scalar pi_search() const { return pi(index_of(CtmcState::Search)); }
  Scalar pi_search_blocked() const { return pi(index_of(CtmcState::SearchBlocked)); }
  Scalar pi_transport() const { return pi(index_of(CtmcState::Transport)); }
  Scalar pi_transport_blocked() const { return pi(index_of(CtmcState::TransportBlocked)); }
};

/**
 * Generator over {Search, SearchBlocked, Transport, TransportBlocked}.
 *
 * Search -> Transport at omega_p, Transport -> Search at omega_d (one
 * delivery), each unblocked state -> its blocked twin at omega_c(lambda),
 * blocked -> unblocked at rho. Blocking preserves task progress.
 */
template <typename Scalar>
GeneratorMatrix<Scalar> build_generator(const CtmcConfig<Scalar>& config, Scalar lambda) {
  config.validate();
  if (!(lambda >= 0)) throw InvalidInput("build_generator: lambda must be >= 0");
  const auto [omega_p, omega_d] = task_rates(config.params);
  const Scalar omega_c = encounter_rate(config.params, lambda);
  const Scalar rho = config.params.rho;

  constexpr int S = index_of(CtmcState::Search);
  constexpr int SB = index_of(CtmcState::SearchBlocked);
  constexpr int T = index_of(CtmcState::Transport);
  constexpr int TB = index_of(CtmcState::TransportBlocked);

  Matrix4<Scalar> q = Matrix4<Scalar>::Zero();
  q(S, T) = omega_p;
  q(S, SB) = omega_c;
  q(SB, S) = rho;
  q(T, S) = omega_d;
  q(T, TB) = omega_c;
  q(TB, T) = rho;
  for (int i = 0; i < kCtmcStates; ++i) q(i, i) = -q.row(i).sum();
  return {q, lambda};
}

/// Rejects matrices that are not CTMC generators.
template <typename Scalar>
void check_generator(const Matrix4<Scalar>& q, Scalar tol = Scalar(1e-12)) {
  for (int i = 0; i < kCtmcStates; ++i) {
    Scalar scale = Scalar(1);
    for (int j = 0; j < kCtmcStates; ++j) {
      if (i != j && !(q(i, j) >= 0)) throw InvalidInput("generator has a negative off-diagonal rate");
      scale = std::max(scale, std::abs(q(i, j)));
    }
    if (std::abs(q.row(i).sum()) > tol * scale) throw InvalidInput("generator row does not sum to zero");
  }
}

/**
 * Stationary distribution: solves pi Q = 0 with sum(pi) = 1 by replacing one
 * balance equation with the normalization row. A chain with more than one
 * closed class makes this system singular and is reported as NumericalFailure.
 */
template <typename Scalar>
CtmcSolution<Scalar> steady_state(const GeneratorMatrix<Scalar>& gen) {
  const Matrix4<Scalar>& q = gen.entries;
  check_generator(q);

  Matrix4<Scalar> system = q.transpose();
  system.row(kCtmcStates - 1).setOnes();
  Vector4<Scalar> rhs = Vector4<Scalar>::Zero();
  rhs(kCtmcStates - 1) = Scalar(1);

  Eigen::FullPivLU<Matrix4<Scalar>> lu(system);
  if (!lu.isInvertible()) {
    throw NumericalFailure("steady_state: generator is reducible (rank " +
                           std::to_string(lu.rank()) + " balance system)");
  }
  Vector4<Scalar> pi = lu.solve(rhs);

  const Scalar scale = std::max(Scalar(1), q.cwiseAbs().maxCoeff());
  const Scalar residual = (pi.transpose() * q).cwiseAbs().maxCoeff();
  if (!(residual <= Scalar(1e-9) * scale) || !(pi.minCoeff() >= -Scalar(1e-12))) {
    throw NumericalFailure("steady_state: ill-conditioned balance system, residual " +
                           std::to_string(static_cast<double>(residual)));
  }
  pi = pi.cwiseMax(Scalar(0));
  pi /= pi.sum();

  const Scalar omega_d = q(index_of(CtmcState::Transport), index_of(CtmcState::Search));
  return {pi, omega_d * pi(index_of(CtmcState::Transport)), gen.lambda_used};
}

/// Closed-form stationary distribution of the four-state chain; used as a
/// cross-check of the numerical solve.
template <typename Scalar>
CtmcSolution<Scalar> closed_form_steady_state(const CtmcConfig<Scalar>& config, Scalar lambda) {
  const auto [omega_p, omega_d] = task_rates(config.params);
  const Scalar blocking = encounter_rate(config.params, lambda) / config.params.rho;
  const Scalar a = Scalar(1) / omega_p + Scalar(1) / omega_d;
  const Scalar k = Scalar(1) / (a * (Scalar(1) + blocking));
  Vector4<Scalar> pi;
  pi << k / omega_p, blocking * k / omega_p, k / omega_d, blocking * k / omega_d;
  return {pi, k, lambda};
}

/// A = 1/omega_p + 1/omega_d, the mean unobstructed task cycle time.
template <typename Scalar>
Scalar cycle_time(const SwarmParams<Scalar>& params) {
  const auto [omega_p, omega_d] = task_rates(params);
  return Scalar(1) / omega_p + Scalar(1) / omega_d;
}

/// Deliveries per unit area per unit time at density lambda.
template <typename Scalar>
Scalar swarm_throughput(const CtmcConfig<Scalar>& config, Scalar lambda) {
  if (!(lambda >= 0)) throw InvalidInput("swarm_throughput: lambda must be >= 0");
  return lambda * steady_state(build_generator(config, lambda)).per_robot_delivery_rate;
}

/// Limit of swarm_throughput as lambda grows without bound: rho / (c A).
template <typename Scalar>
Scalar throughput_asymptote(const CtmcConfig<Scalar>& config) {
  return config.params.rho / (encounter_coefficient(config.params) * cycle_time(config.params));
}

/// Net objective J = Q(lambda) - C lambda.
template <typename Scalar>
Scalar net_objective(const CtmcConfig<Scalar>& config, Scalar lambda) {
  return swarm_throughput(config, lambda) - config.cost_c * lambda;
}

/**
 * dJ/dlambda from the numeric chain. Differentiating pi Q = 0, sum(pi) = 1
 * gives the same linear system as steady_state with right-hand side
 * -(dQ/dlambda)^T pi, and dQ/dlambda only touches the encounter entries.
 */
template <typename Scalar>
Scalar net_objective_slope(const CtmcConfig<Scalar>& config, Scalar lambda) {
  const auto gen = build_generator(config, lambda);
  const auto sol = steady_state(gen);
  constexpr int S = index_of(CtmcState::Search);
  constexpr int SB = index_of(CtmcState::SearchBlocked);
  constexpr int T = index_of(CtmcState::Transport);
  constexpr int TB = index_of(CtmcState::TransportBlocked);
  const Scalar c = encounter_coefficient(config.params);
  Matrix4<Scalar> dq = Matrix4<Scalar>::Zero();
  dq(S, SB) = c;
  dq(S, S) = -c;
  dq(T, TB) = c;
  dq(T, T) = -c;

  Matrix4<Scalar> system = gen.entries.transpose();
  system.row(kCtmcStates - 1).setOnes();
  Vector4<Scalar> rhs = -(dq.transpose() * sol.pi);
  rhs(kCtmcStates - 1) = Scalar(0);
  const Vector4<Scalar> dpi = Eigen::FullPivLU<Matrix4<Scalar>>(system).solve(rhs);
  const Scalar omega_d = gen.entries(T, S);
  return omega_d * (sol.pi(T) + lambda * dpi(T)) - config.cost_c;
}

enum class OptimumKind {
  Interior,    ///< finite positive maximizer
  Degenerate,  ///< J is maximized at lambda = 0; no robots should be deployed
  Unbounded,   ///< C = 0, J increases without an interior maximum
};

template <typename Scalar>
struct OptimalDensity {
  OptimumKind kind{OptimumKind::Interior};
  Scalar lambda_star{0};   ///< infinity when Unbounded
  Scalar objective{0};     ///< J(lambda_star), or the asymptote when Unbounded
  Scalar closed_form{0};   ///< (rho/c)(1/sqrt(AC) - 1) clipped at 0
  Scalar upper_bound{0};   ///< final search bracket
};

/// Closed-form optimum of Q(lambda) - C lambda for the four-state chain.
template <typename Scalar>
Scalar closed_form_optimal_density(const CtmcConfig<Scalar>& config) {
  if (!(config.cost_c > 0)) return std::numeric_limits<Scalar>::infinity();
  const Scalar ac = cycle_time(config.params) * config.cost_c;
  const Scalar ratio = config.params.rho / encounter_coefficient(config.params);
  return std::max(Scalar(0), ratio * (Scalar(1) / std::sqrt(ac) - Scalar(1)));
}

/**
 * Maximizes J(lambda) = Q(lambda) - C lambda over lambda >= 0.
 *
 * Coarse grid of `grid_points` on [0, 10 rho/c], then golden-section inside
 * the bracket around the best grid point to `rel_tol`. If the grid maximum
 * sits on the upper edge the bracket is doubled and the grid repeated.
 */
template <typename Scalar>
OptimalDensity<Scalar> optimal_density(const CtmcConfig<Scalar>& config, int grid_points = 10000,
                                       Scalar rel_tol = Scalar(1e-8)) {
  config.validate();
  OptimalDensity<Scalar> out;
  out.closed_form = closed_form_optimal_density(config);
  if (!(config.cost_c > 0)) {
    out.kind = OptimumKind::Unbounded;
    out.lambda_star = std::numeric_limits<Scalar>::infinity();
    out.objective = throughput_asymptote(config);
    return out;
  }

  const auto objective = [&config](Scalar lambda) { return net_objective(config, lambda); };
  Scalar upper = Scalar(10) * config.params.rho / encounter_coefficient(config.params);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Scalar h = upper / Scalar(grid_points);
    int best = 0;
    Scalar best_value = objective(Scalar(0));
    for (int i = 1; i <= grid_points; ++i) {
      const Scalar value = objective(h * Scalar(i));
      if (value > best_value) {
        best_value = value;
        best = i;
      }
    }
    if (best == grid_points) {
      upper *= Scalar(2);
      continue;
    }
    out.upper_bound = upper;
    const Scalar lo = best == 0 ? Scalar(0) : h * Scalar(best - 1);
    const Scalar hi = h * Scalar(best + 1);
    auto refined = golden_section_maximize<Scalar>(objective, lo, hi, rel_tol);
    // Comparing J values stalls near sqrt(machine epsilon) because J is flat
    // at its peak; bisecting the slope sign pins the maximizer much tighter.
    if (net_objective_slope(config, lo) > 0 && net_objective_slope(config, hi) < 0) {
      Scalar a = lo;
      Scalar b = hi;
      for (int it = 0; it < 200; ++it) {
        const Scalar mid = (a + b) / Scalar(2);
        if (!(mid > a && mid < b)) break;
        (net_objective_slope(config, mid) > 0 ? a : b) = mid;
      }
      refined.argmax = (a + b) / Scalar(2);
      refined.value = objective(refined.argmax);
    }
    // J is strictly concave with J(0) = 0; a maximizer pinned against zero
    // means the marginal robot already costs more than it delivers. At
    // AC = 1 exactly the slope at zero is zero up to rounding.
    const Scalar rounding = Scalar(16) * std::numeric_limits<Scalar>::epsilon() * config.cost_c;
    if (best == 0 && (refined.value <= objective(Scalar(0)) || net_objective_slope(config, Scalar(0)) <= rounding)) {
      out.kind = OptimumKind::Degenerate;
      out.lambda_star = Scalar(0);
      out.objective = objective(Scalar(0));
    } else {
      out.kind = OptimumKind::Interior;
      out.lambda_star = refined.argmax;
      out.objective = refined.value;
    }
    return out;
  }
  throw NumericalFailure("optimal_density: objective still increasing at the search bound");
}

/**
 * Jump-process simulation of the single-robot chain. Returns time-averaged
 * occupancies and the empirical delivery rate over `horizon`. Starts in Search.
 */
CtmcSolution<double> monte_carlo_occupancy(const CtmcConfig<double>& config, double lambda,
                                           double horizon, Rng& rng);

}  // namespace swarm

#endif  // SWARM_CTMC_HPP
