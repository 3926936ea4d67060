#ifndef SWARM_ERRORS_HPP
#define SWARM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace swarm {

/// Raised when an argument or configuration value violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine cannot produce a trustworthy answer
/// (singular systems, reducible chains).
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace swarm

#endif  // SWARM_ERRORS_HPP
