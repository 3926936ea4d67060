#include "swarm/ctmc.hpp"

namespace swarm {

CtmcSolution<double> monte_carlo_occupancy(const CtmcConfig<double>& config, double lambda,
                                           double horizon, Rng& rng) {
  if (!(horizon > 0)) throw InvalidInput("monte_carlo_occupancy: horizon must be > 0");
  const Matrix4<double> q = build_generator(config, lambda).entries;

  Vector4<double> occupancy = Vector4<double>::Zero();
  long deliveries = 0;
  int state = index_of(CtmcState::Search);
  double t = 0.0;
  while (t < horizon) {
    const double exit_rate = -q(state, state);
    const double hold = sample_exponential(rng, exit_rate);
    if (t + hold >= horizon) {
      occupancy(state) += horizon - t;
      break;
    }
    occupancy(state) += hold;
    t += hold;

    // Competing exponential clocks: pick the next state proportional to its rate.
    double pick = uniform01(rng) * exit_rate;
    int next = state;
    for (int j = 0; j < kCtmcStates; ++j) {
      if (j == state || q(state, j) <= 0) continue;
      next = j;
      pick -= q(state, j);
      if (pick < 0) break;
    }
    if (state == index_of(CtmcState::Transport) && next == index_of(CtmcState::Search)) ++deliveries;
    state = next;
  }
  return {occupancy / horizon, static_cast<double>(deliveries) / horizon, lambda};
}

}  // namespace swarm
