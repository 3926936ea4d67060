#include "swarm/rates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace swarm {

double sample_exponential(Rng& rng, double rate) {
  if (!(rate > 0)) throw InvalidInput("sample_exponential: rate must be > 0");
  // 1 - u lies in (0, 1], so the logarithm is finite.
  return -std::log1p(-uniform01(rng)) / rate;
}

long sample_poisson(Rng& rng, double mean) {
  if (!(mean >= 0)) throw InvalidInput("sample_poisson: mean must be >= 0");
  long count = 0;
  double t = sample_exponential(rng, 1.0);
  while (t <= mean) {
    ++count;
    t += sample_exponential(rng, 1.0);
  }
  return count;
}

double ks_distance_exponential(std::span<const double> samples, double rate) {
  if (samples.empty()) throw InvalidInput("ks_distance_exponential: no samples");
  if (!(rate > 0)) throw InvalidInput("ks_distance_exponential: rate must be > 0");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = -std::expm1(-rate * std::max(sorted[i], 0.0));
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, hi - cdf, cdf - lo});
  }
  return d;
}

ExponentialFit fit_exponential_rate(std::span<const double> samples) {
  if (samples.empty()) throw InvalidInput("fit_exponential_rate: no samples");
  for (double s : samples) {
    if (!(s > 0)) throw InvalidInput("fit_exponential_rate: samples must be > 0");
  }
  const double mean =
      std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  const double rate = 1.0 / mean;
  return {rate, mean, ks_distance_exponential(samples, rate), samples.size()};
}

}  // namespace swarm
