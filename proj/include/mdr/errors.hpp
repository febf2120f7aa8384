#ifndef MDR_ERRORS_HPP
#define MDR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mdr {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Matvec or estimator produced a non-finite value.
class NumericError : public Error {
public:
  using Error::Error;
};

// An iteration or degree budget ran out before a certificate was reached.
class BudgetError : public Error {
public:
  BudgetError(const std::string& msg, double required = 0.0)
      : Error(msg), required(required) {}
  double required;
};

class CapExceededError : public Error {
public:
  using Error::Error;
};

class NotPositiveDefiniteError : public Error {
public:
  using Error::Error;
};

class NoConvergenceError : public Error {
public:
  NoConvergenceError(const std::string& msg, double residual)
      : Error(msg), residual(residual) {}
  double residual;
};

class BracketError : public Error {
public:
  using Error::Error;
};

class UnsupportedInstanceError : public Error {
public:
  using Error::Error;
};

class RankError : public Error {
public:
  using Error::Error;
};

class StructureViolationError : public Error {
public:
  using Error::Error;
};

class HomotopyError : public Error {
public:
  HomotopyError(const std::string& msg, int phase) : Error(msg), phase(phase) {}
  int phase;
};

class InfeasibilitySuspectedError : public Error {
public:
  using Error::Error;
};

class TargetUnmetError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace mdr

#endif
