#ifndef SWARM_GOLDEN_SECTION_HPP
#define SWARM_GOLDEN_SECTION_HPP

#include <cmath>
#include <cstddef>

namespace swarm {

template <typename Scalar>
struct ScalarMaximum {
  Scalar argmax;
  Scalar value;
  std::size_t iterations;
};

/**
 * Golden-section search for the maximum of a unimodal function on [lo, hi].
 *
 * Stops when the bracket width falls below `rel_tol * max(1, |x|)` or after
 * `max_iterations`. One function evaluation per iteration.
 */
template <typename Scalar, typename F>
ScalarMaximum<Scalar> golden_section_maximize(F&& f, Scalar lo, Scalar hi, Scalar rel_tol,
                                              std::size_t max_iterations = 500) {
  const Scalar inv_phi = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar a = lo;
  Scalar b = hi;
  Scalar c = b - inv_phi * (b - a);
  Scalar d = a + inv_phi * (b - a);
  Scalar fc = f(c);
  Scalar fd = f(d);
  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    const Scalar mid = (a + b) / 2;
    const Scalar scale = std::abs(mid) > Scalar(1) ? std::abs(mid) : Scalar(1);
    if (b - a <= rel_tol * scale) break;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const Scalar x = (a + b) / 2;
  return {x, f(x), it};
}

}  // namespace swarm

#endif  // SWARM_GOLDEN_SECTION_HPP
