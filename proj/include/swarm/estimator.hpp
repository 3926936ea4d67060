#ifndef SWARM_ESTIMATOR_HPP
#define SWARM_ESTIMATOR_HPP

#include <deque>
#include <optional>

#include "swarm/rates.hpp"

namespace swarm {

/**
 * Sliding record of encounter onsets seen by one robot.
 *
 * Onsets are registered from sampled partner counts: every unit of strict
 * increase in the number of current partners is one new encounter. Stamps
 * older than `now - horizon` are discarded.
 */
class EncounterWindow {
 public:
  /// `start_time` is when the robot began sensing; the window is not ready
  /// until a full horizon has elapsed since then.
  explicit EncounterWindow(double horizon, double start_time = 0.0);

  /// Throws InvalidInput if `t` precedes the last recorded time or
  /// `partners` is negative.
  void record_partner_count(double t, int partners);

  /// Number of onsets in the closed interval [t - L, t]; empty until
  /// t - start_time >= L.
  std::optional<int> windowed_count(double t) const;

  double horizon() const { return horizon_; }
  double start_time() const { return start_time_; }
  double last_time() const { return last_time_; }
  int current_partners() const { return current_partners_; }
  const std::deque<double>& onsets() const { return onsets_; }

 private:
  void prune(double t);

  double horizon_;
  double start_time_;
  double last_time_;
  int current_partners_ = 0;
  std::deque<double> onsets_;
};

struct DensityEstimate {
  double value{0};      ///< estimated robots per unit area
  int sample_count{0};  ///< encounters counted in the window
  double at_time{0};
};

/// Maximum-likelihood density from `y` encounters over a horizon L:
/// y / (4 delta (4/pi) v L).
template <typename Scalar>
Scalar mle_density_value(int y, const SwarmParams<Scalar>& params, Scalar horizon) {
  if (!(horizon > 0)) throw InvalidInput("mle_density: L must be > 0");
  if (y < 0) throw InvalidInput("mle_density: count must be >= 0");
  return Scalar(y) / (encounter_coefficient(params) * horizon);
}

DensityEstimate mle_density(int y, const SwarmParamsd& params, double horizon, double at_time = 0.0);

}  // namespace swarm

#endif  // SWARM_ESTIMATOR_HPP
