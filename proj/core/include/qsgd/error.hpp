#pragma once

#include <stdexcept>
#include <string>

namespace qsgd {

// Precondition and parameter violations surface as std::invalid_argument.
// Failures of a numeric procedure on valid input (non-convergence, a density
// estimate below the usable floor, a truncation window that is too narrow)
// surface as NumericError so callers can tell the two apart.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qsgd
