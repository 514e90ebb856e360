// eigen.hpp - dense complex eigendecomposition with a residual check.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <sstream>

#include "ptmech/errors.hpp"

namespace ptmech::numerics {

struct EigenDecomposition {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;  // right eigenvectors, unit 2-norm columns
    double max_residual = 0.0; // max_i ||M v_i - lambda_i v_i|| / ||M||
};

/// Hessenberg reduction + shifted QR (Eigen::ComplexEigenSolver). Throws
/// NoConvergence if QR fails or a pair misses `residual_tol`.
inline EigenDecomposition eig_complex(const Eigen::MatrixXcd& m, double residual_tol = 1e-10) {
    if (m.rows() != m.cols()) throw ValidationError("eig_complex: matrix must be square");
    if (!m.allFinite()) throw ValidationError("eig_complex: matrix has non-finite entries");
    EigenDecomposition out;
    if (m.rows() == 0) return out;

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, true);
    if (solver.info() != Eigen::Success) throw NoConvergence("eig_complex: QR iteration failed");
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();

    const double norm = m.norm();
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        const auto v = out.vectors.col(i);
        const double r = (m * v - out.values(i) * v).norm();
        out.max_residual = std::max(out.max_residual, norm > 0 ? r / norm : r);
    }
    if (out.max_residual > residual_tol) {
        std::ostringstream os;
        os << "eig_complex: residual " << out.max_residual << " exceeds " << residual_tol;
        throw NoConvergence(os.str());
    }
    return out;
}

/// Eigenvalues only (still residual-checked).
inline Eigen::VectorXcd eigenvalues(const Eigen::MatrixXcd& m, double residual_tol = 1e-10) {
    return eig_complex(m, residual_tol).values;
}

}  // namespace ptmech::numerics
