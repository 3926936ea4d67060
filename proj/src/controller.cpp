#include "swarm/controller.hpp"

namespace swarm {

RetreatDecision decide(const ControllerConfigd& config, const std::optional<DensityEstimate>& estimate,
                       Rng& rng) {
  RetreatDecision out;
  if (!estimate) {
    out.abstained = true;
    return out;
  }
  out.estimate_used = estimate->value;
  out.epsilon_used = epsilon(config, estimate->value);
  if (out.epsilon_used <= 0) return out;
  const double p = std::min(1.0, out.epsilon_used * config.dt);
  if (p >= 1.0 || uniform01(rng) < p) out.action = RetreatAction::Retreat;
  return out;
}

}  // namespace swarm
