#include "ffde/lyapunov.hpp"

#include <Eigen/Eigenvalues>

namespace ffde {

double spectral_radius(const MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXd solve_discrete_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
  const Index n = A.rows();
  require(A.cols() == n && Q.rows() == n && Q.cols() == n,
          "solve_discrete_lyapunov: dimension mismatch");
  if (n == 0) return MatrixXd(0, 0);

  Eigen::ComplexSchur<MatrixXd> schur(A);
  require(schur.info() == Eigen::Success,
          "solve_discrete_lyapunov: Schur decomposition failed");
  const MatrixXcd& T = schur.matrixT();
  const MatrixXcd& U = schur.matrixU();

  // In Schur coordinates: T X T^* - X = -U^* Q U, solved column by column
  // from the last one, since column j only couples to columns k >= j.
  const MatrixXcd Qt = U.adjoint() * Q.cast<cplx>() * U;
  MatrixXcd X = MatrixXcd::Zero(n, n);
  MatrixXcd TX = MatrixXcd::Zero(n, n);
  for (Index j = n - 1; j >= 0; --j) {
    VectorXcd rhs = -Qt.col(j);
    for (Index k = j + 1; k < n; ++k) rhs -= TX.col(k) * std::conj(T(j, k));
    MatrixXcd lhs = std::conj(T(j, j)) * T;
    lhs.diagonal().array() -= 1.0;
    const cplx pivot_min = lhs.diagonal().cwiseAbs().minCoeff();
    require(std::abs(pivot_min) > 1e-14,
            "solve_discrete_lyapunov: reciprocal eigenvalues, no unique solution");
    X.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
    TX.col(j) = T.triangularView<Eigen::Upper>() * X.col(j);
  }
  MatrixXd P = (U * X * U.adjoint()).real();
  return 0.5 * (P + P.transpose());
}

}  // namespace ffde
