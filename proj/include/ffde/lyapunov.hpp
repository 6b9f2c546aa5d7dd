#pragma once

#include "ffde/types.hpp"

namespace ffde {

/// Solves A X A^T - X + Q = 0 for Schur-stable A by complex-Schur
/// back substitution (Bartels-Stewart). Q must be symmetric; the result is
/// symmetrized before returning.
MatrixXd solve_discrete_lyapunov(const MatrixXd& A, const MatrixXd& Q);

/// Largest eigenvalue magnitude of A.
double spectral_radius(const MatrixXd& A);

}  // namespace ffde
