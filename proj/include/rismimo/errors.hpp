#pragma once

#include <stdexcept>
#include <string>

namespace rismimo {

/// Shape or length disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (NaN input,
/// phase out of range, unsupported modulation order, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The aggregated channel cannot carry the requested number of streams.
class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Layer used out of order (backward before forward, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace rismimo
