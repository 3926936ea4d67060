#ifndef SWARM_DETAIL_REPLICAS_HPP
#define SWARM_DETAIL_REPLICAS_HPP

#include <algorithm>
#include <future>
#include <thread>

namespace swarm {

template <typename Result>
std::vector<Result> run_replicas(const SimConfig& base, int replicas,
                                 const std::function<Result(int, const SimConfig&)>& fn) {
  if (replicas < 1) throw InvalidInput("replicas must be >= 1");
  const int width = std::max(1u, std::thread::hardware_concurrency());
  std::vector<Result> results;
  results.reserve(static_cast<std::size_t>(replicas));
  for (int first = 0; first < replicas; first += width) {
    const int last = std::min(replicas, first + width);
    std::vector<std::future<Result>> batch;
    for (int i = first; i < last; ++i) {
      SimConfig config = base;
      config.seed = base.seed + static_cast<std::uint64_t>(i);
      batch.push_back(std::async(std::launch::async, [&fn, i, config] { return fn(i, config); }));
    }
    for (auto& f : batch) results.push_back(f.get());
  }
  return results;
}

}  // namespace swarm

#endif  // SWARM_DETAIL_REPLICAS_HPP
