#pragma once

#include <stdexcept>
#include <string>

namespace mmbh {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParams : Error {
  using Error::Error;
};
struct DuplicateOrSelfLoop : Error {
  using Error::Error;
};
struct DisconnectedNetwork : Error {
  using Error::Error;
};
struct DegreeViolation : Error {
  using Error::Error;
};
struct GenerationFailure : Error {
  using Error::Error;
};
struct LinkNotInPattern : Error {
  using Error::Error;
};
struct TooManyLinks : Error {
  using Error::Error;
};
struct PriorityBoundViolation : Error {
  using Error::Error;
};
struct NumericalFailure : Error {
  using Error::Error;
};
struct InfeasibleModel : Error {
  using Error::Error;
};
struct NodeLimitNoIncumbent : Error {
  using Error::Error;
};
struct InconsistentSolution : Error {
  using Error::Error;
};
struct DivisionByZero : Error {
  using Error::Error;
};

}  // namespace mmbh
