#pragma once

#include <stdexcept>
#include <string>

namespace qbline {

// Invalid chain, charger or state parameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Analytic diagonalization requested for a non-uniform coupling profile.
class UnsupportedProfileError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the domain of a closed-form expression.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Numeric propagation failed; carries the achieved error estimate.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double achieved_error)
      : std::runtime_error(what), achieved_error_(achieved_error) {}
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

// A computed quantity violated an invariant by more than round-off.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The printed three-level W-line populations produced a negative vacuum weight.
class FormulaBreakdownError : public std::runtime_error {
 public:
  FormulaBreakdownError(const std::string& what, double vacuum_population)
      : std::runtime_error(what), vacuum_population_(vacuum_population) {}
  double vacuum_population() const noexcept { return vacuum_population_; }

 private:
  double vacuum_population_;
};

// No interior power maximum inside the search window.
class WindowTooSmallError : public std::runtime_error {
 public:
  WindowTooSmallError(const std::string& what, double window)
      : std::runtime_error(what), window_(window) {}
  double window() const noexcept { return window_; }

 private:
  double window_;
};

// Caller handed an empty table or otherwise broke a precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace qbline
