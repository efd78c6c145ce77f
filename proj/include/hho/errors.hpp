#pragma once

#include <stdexcept>
#include <string>

namespace hho {

/// Failure of a numerical kernel: singular or indefinite matrix, a solver that
/// did not converge, or a violated discrete stability property.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hho
