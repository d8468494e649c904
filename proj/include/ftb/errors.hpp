#pragma once

#include <stdexcept>
#include <string>

namespace ftb {

// Exit-code contract used by the CLI: 2 validation, 3 convergence, 4 I/O.
enum class ErrorClass { validation = 2, convergence = 3, io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& msg) : std::runtime_error(msg), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }

 private:
  ErrorClass cls_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(ErrorClass::validation, msg) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& msg) : Error(ErrorClass::convergence, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorClass::io, msg) {}
};

// No feasible savings plan keeps consumption positive in both periods.
class InfeasibleBudget : public SolverError {
 public:
  explicit InfeasibleBudget(const std::string& msg) : SolverError(msg) {}
};

// Requested value lies below the infeasibility boundary of V(w, .).
class Unattainable : public SolverError {
 public:
  explicit Unattainable(const std::string& msg) : SolverError(msg) {}
};

// Housing stock and arrival population carry different total mass.
class MassMismatch : public ValidationError {
 public:
  explicit MassMismatch(const std::string& msg) : ValidationError(msg) {}
};

// Stationary price formula needs r > 0.
class RateRequired : public ValidationError {
 public:
  explicit RateRequired(const std::string& msg) : ValidationError(msg) {}
};

class OdeStepFailure : public SolverError {
 public:
  explicit OdeStepFailure(const std::string& msg) : SolverError(msg) {}
};

// No tax schedule raising the requested revenue keeps incumbent consumption positive.
class RevenueInfeasible : public SolverError {
 public:
  explicit RevenueInfeasible(const std::string& msg) : SolverError(msg) {}
};

class NoConvergence : public SolverError {
 public:
  explicit NoConvergence(const std::string& msg) : SolverError(msg) {}
};

class InsufficientData : public ValidationError {
 public:
  explicit InsufficientData(const std::string& msg) : ValidationError(msg) {}
};

class SingularDesign : public SolverError {
 public:
  explicit SingularDesign(const std::string& msg) : SolverError(msg) {}
};

class InvalidParams : public ValidationError {
 public:
  explicit InvalidParams(const std::string& msg) : ValidationError(msg) {}
};

}  // namespace ftb
