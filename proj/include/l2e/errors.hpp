#pragma once

#include <stdexcept>
#include <string>

namespace l2e {

// Root of the library's exception hierarchy. Everything thrown on purpose
// derives from this, so callers can catch l2e::Error at API boundaries.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent caller input (bad shapes, labels, ranges).
struct InvalidInput : Error {
  using Error::Error;
};

// A requested train/test split cannot be realized on the given data.
struct InfeasibleSplit : Error {
  using Error::Error;
};

// A split kept failing after the allowed number of redraws.
struct SplitFailure : Error {
  using Error::Error;
};

// An iterative learner exhausted its sweep budget before converging.
struct LearnerNonConvergence : Error {
  using Error::Error;
};

// Too few trajectory points for the requested curve family.
struct InsufficientPoints : Error {
  using Error::Error;
};

// A curve fit could not produce a usable solution.
struct FitFailure : Error {
  using Error::Error;
};

// The usable subsample range is too narrow for the requested operation.
struct InsufficientRange : Error {
  using Error::Error;
};

// A simulation scenario keeps producing unusable data.
struct DegenerateScenario : Error {
  using Error::Error;
};

// Text input (CSV, config) that does not parse.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace l2e
