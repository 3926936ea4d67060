#include "swarm/estimator.hpp"

#include <algorithm>
#include <limits>

namespace swarm {

EncounterWindow::EncounterWindow(double horizon, double start_time)
    : horizon_(horizon), start_time_(start_time), last_time_(start_time) {
  if (!(horizon > 0)) throw InvalidInput("EncounterWindow: horizon must be > 0");
}

void EncounterWindow::record_partner_count(double t, int partners) {
  if (t < last_time_) throw InvalidInput("EncounterWindow: time went backwards");
  if (partners < 0) throw InvalidInput("EncounterWindow: negative partner count");
  for (int i = current_partners_; i < partners; ++i) onsets_.push_back(t);
  current_partners_ = partners;
  last_time_ = t;
  prune(t);
}

void EncounterWindow::prune(double t) {
  const double cutoff = t - horizon_;
  while (!onsets_.empty() && onsets_.front() < cutoff) onsets_.pop_front();
}

std::optional<int> EncounterWindow::windowed_count(double t) const {
  if (t - start_time_ < horizon_) return std::nullopt;
  const auto lo = std::lower_bound(onsets_.begin(), onsets_.end(), t - horizon_);
  const auto hi = std::upper_bound(onsets_.begin(), onsets_.end(), t);
  return static_cast<int>(hi - lo);
}

DensityEstimate mle_density(int y, const SwarmParamsd& params, double horizon, double at_time) {
  return {mle_density_value(y, params, horizon), y, at_time};
}

}  // namespace swarm
