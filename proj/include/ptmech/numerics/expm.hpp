// expm.hpp - matrix exponential.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "ptmech/errors.hpp"

namespace ptmech::numerics {

/// e^M by scaling-and-squaring with a Pade approximant (Higham 2005, as
/// implemented by Eigen's MatrixFunctions module).
template <class Derived>
typename Derived::PlainObject expm(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) throw ValidationError("expm: matrix must be square");
    if (!m.allFinite()) throw ValidationError("expm: matrix has non-finite entries");
    typename Derived::PlainObject result = m.derived().exp();
    return result;
}

}  // namespace ptmech::numerics
