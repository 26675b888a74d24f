#pragma once
#include <stdexcept>
#include <string>

namespace dpa {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// input text or config could not be parsed
struct ParseError : Error {
  using Error::Error;
};

// a certified comparison stayed ambiguous at the precision cap
struct UndecidableError : Error {
  using Error::Error;
};

// an enumeration, table or series exceeded its configured budget
struct BudgetError : Error {
  using Error::Error;
};

// a theorem hypothesis does not hold for the requested parameters;
// engines refuse to run rather than degrade
struct ThresholdError : Error {
  std::string inequality;  // the failing hypothesis, human readable
  ThresholdError(const std::string& ineq, const std::string& msg)
      : Error(msg), inequality(ineq) {}
};

// malformed or out-of-domain request
struct DomainError : Error {
  using Error::Error;
};

}  // namespace dpa
