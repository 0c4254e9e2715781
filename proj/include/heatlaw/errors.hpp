#pragma once

#include <stdexcept>
#include <string>

namespace heatlaw {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// density returned NaN/inf away from a declared endpoint
struct NonEvaluable : Error {
  double at;
  double value;
  NonEvaluable(double x, double v)
      : Error("density not finite at e=" + std::to_string(x)), at(x), value(v) {}
};

struct CapExceeded : Error {
  using Error::Error;
};

struct StateNotCommuting : Error {
  using Error::Error;
};

struct EigenvectorInput : Error {
  using Error::Error;
};

struct DegenerateCoupling : Error {
  using Error::Error;
};

struct MGFDiverges : Error {
  double gamma_critical;
  MGFDiverges(double gc, const std::string& what) : Error(what), gamma_critical(gc) {}
};

struct InsufficientTail : Error {
  using Error::Error;
};

struct PreconditionViolation : Error {
  using Error::Error;
};

// a verdict required by a caller could not be settled
struct InconclusiveVerdict : Error {
  using Error::Error;
};

}  // namespace heatlaw
