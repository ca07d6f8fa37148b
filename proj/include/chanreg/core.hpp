#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace chanreg {

using Real = double;
using Complex = std::complex<Real>;
using Index = Eigen::Index;

using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using Array = Eigen::Array<Real, Eigen::Dynamic, 1>;
using CArray = Eigen::Array<Complex, Eigen::Dynamic, 1>;

inline constexpr Real pi = 3.141592653589793238462643383279502884;

// Raised when two objects that must share a grid do not.
struct GridMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a field violates the space constraints an operator requires.
struct SpaceViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when time integration produces non-finite values or violates CFL.
struct NumericalAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace chanreg
