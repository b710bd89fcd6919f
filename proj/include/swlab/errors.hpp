#pragma once

#include <stdexcept>
#include <string>

namespace swlab {

// Malformed input: wrong shapes, non-finite entries, broken invariants.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// State became non-finite or overflowed during integration.
struct NumericalBlowup : std::runtime_error {
  double time;
  NumericalBlowup(const std::string& what, double t) : std::runtime_error(what), time(t) {}
};

// Two trajectories do not agree at the splice time.
struct SwitchingMismatch : std::runtime_error {
  double gap;
  SwitchingMismatch(const std::string& what, double g) : std::runtime_error(what), gap(g) {}
};

// Curves could not be brought into general position within the retry budget.
struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A curve could not be replaced by a simple polygon within tolerance.
struct ApproximationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The extremal-norm iteration was started away from the stability boundary.
struct NotAtBoundary : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A theorem's conclusion failed on inputs satisfying its hypotheses.
struct Falsification : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace swlab
