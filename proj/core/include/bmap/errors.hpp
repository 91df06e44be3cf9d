#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bmap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model or configuration data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a function (non-finite theta, t < 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// A standing assumption (supercriticality, interior minimum of lambda/theta) fails.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

class SimulationTruncated : public Error {
 public:
  SimulationTruncated(double time, std::size_t population)
      : Error("population of " + std::to_string(population) +
              " exceeded the particle cap at t=" + std::to_string(time)),
        time_(time),
        population_(population) {}

  double time() const noexcept { return time_; }
  std::size_t population() const noexcept { return population_; }

 private:
  double time_;
  std::size_t population_;
};

// The tracked front left the computational domain.
class FrontLostError : public Error {
 public:
  using Error::Error;
};

}  // namespace bmap
