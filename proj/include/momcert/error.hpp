#pragma once

#include <stdexcept>
#include <string>

namespace momcert {

enum class ErrorKind {
  InvalidInput,
  NotPSD,
  Unstable,
  InvalidSet,
  KappaOne,
  OutOfDomain,
  NoCertificate,
  Infeasible,
  NoiseTooLarge,
  Unsupported,
  DegenerateWeight,
  Degenerate,
  Diverged,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by run_path when an iterate leaves the finite range.
class DivergedError : public Error {
 public:
  DivergedError(long step, const std::string& what)
      : Error(ErrorKind::Diverged, what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

// Raised by ergodicity budgets whose feasibility slack is not positive.
class InfeasibleError : public Error {
 public:
  InfeasibleError(double slack, const std::string& what)
      : Error(ErrorKind::Infeasible, what), slack_(slack) {}
  double slack() const noexcept { return slack_; }

 private:
  double slack_;
};

}  // namespace momcert
