#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace purcell {

/// Invalid argument value (non-finite, out of domain, mismatched sizes).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A closed-form expression is evaluated at one of its poles.
class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A searched-for feature (resonance peak, root) is absent.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nonlinear fit failed to converge or produced a rejected solution.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::size_t iterations)
      : std::runtime_error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

/// Malformed or incomplete run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace purcell
