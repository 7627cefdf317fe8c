#pragma once

#include <stdexcept>
#include <string>

namespace nlrl {

/// Variable index not covered by the declared arity or assignment.
class ArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Real-valued input outside the unit interval (or not finite).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Request exceeds an enumeration bound (truth tables, Kronecker expansion).
class ResourceError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Tensor shapes do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A formula cannot be hosted by the given network layout.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient during training.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t last_finite_epoch)
      : std::runtime_error(what), last_finite_epoch_(last_finite_epoch) {}

  std::size_t last_finite_epoch() const noexcept { return last_finite_epoch_; }

 private:
  std::size_t last_finite_epoch_;
};

}  // namespace nlrl
