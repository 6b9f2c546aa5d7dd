#pragma once

#include <vector>

#include "ffde/types.hpp"

namespace ffde {

/// Discrete-time LTI plant
///   x+ = A x + B u + Bd d + Bw w + Bf f
///   y  = C x + D u + Dw w + Df f
/// Absent channels are zero-width matrices, never omitted.
struct StateSpace {
  MatrixXd A, B, Bd, Bw, Bf;
  MatrixXd C, D, Dw, Df;
  double sample_period = 0.0;  // informational; 0 means unspecified

  Index nx() const { return A.rows(); }
  Index nu() const { return B.cols(); }
  Index nd() const { return Bd.cols(); }
  Index nw() const { return Bw.cols(); }
  Index nf() const { return Bf.cols(); }
  Index ny() const { return C.rows(); }

  /// Throws Error when any block disagrees with (nx, nu, nd, nw, nf, ny).
  void validate() const;

  /// Plant with all channels sized consistently and zero-filled.
  static StateSpace zeros(Index nx, Index nu, Index nd, Index nw, Index nf,
                          Index ny);
};

/// H(q)[x; d] + L[y; u] + W w + G f + [x0; 0] = 0 with H(q) = H0 + H1 q.
struct DaeForm {
  MatrixXd H0, H1, L, W, G;

  Index n_eq() const { return H0.rows(); }        // nx + ny
  Index n_unknown() const { return H0.cols(); }   // nx + nd
};

/// F(q) = N(q) / a(q) with N(q) = sum_i N_i q^i and
/// a(q) = q^{d_a+1} + sum_i a_i q^i. Coefficients are ascending in q.
struct FilterForm {
  VectorXd a;                  // a_0 .. a_{d_a}
  std::vector<MatrixXd> N;     // N_0 .. N_{d_N}, each n_r x (nx + ny)

  int d_a() const { return static_cast<int>(a.size()) - 1; }
  int d_N() const { return static_cast<int>(N.size()) - 1; }
  Index n_r() const { return N.empty() ? 0 : N.front().rows(); }
  Index width() const { return N.empty() ? 0 : N.front().cols(); }

  /// Horizontal concatenation [N_0 ... N_{d_N}].
  MatrixXd stacked() const;

  static FilterForm from_stacked(const MatrixXd& stacked_numerator,
                                 const VectorXd& a);

  /// Roots of a(q) (eigenvalues of its companion matrix).
  VectorXcd poles() const;
  double spectral_radius() const;
};

/// General discrete-time realization (A, B, C, D).
struct Realization {
  MatrixXd A, B, C, D;

  Index order() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C.rows(); }
};

/// Observable canonical realization of the residual channels of a filter.
/// The noise channel is (A, Bw, C) and the fault channel is (A, Bf, C).
struct CanonicalRealization {
  MatrixXd A, Bw, Bf, C;

  Realization noise_channel() const;
  Realization fault_channel() const;
};

DaeForm to_dae(const StateSpace& sys);

/// Block-Toeplitz [H0 H1 0 ...; 0 H0 H1 ...] with d_N+1 block rows.
MatrixXd stack_nullspace(const DaeForm& dae, int d_N);

/// Orthonormal basis (as rows) of the left null space of M, from the SVD
/// with threshold rel_tol * sigma_max. Rows are ordered from the smallest
/// singular direction upwards, so the most reliable null vectors come first.
MatrixXd left_null_basis(const MatrixXd& M, double rel_tol = 1e-9);

/// Denominator (q - root)^{n} as ascending coefficients without the
/// leading one.
VectorXd repeated_root(double root, int n);

/// Companion block of a(q): ones on the subdiagonal, last column -a.
MatrixXd companion(const VectorXd& a);

/// Realization of  sign * N(q) M / a(q)  in the observable canonical form.
Realization realize_channel(const FilterForm& f, const MatrixXd& M,
                            double sign);

/// Observable canonical realization of -N(q)W/a(q) and -N(q)G/a(q).
/// Requires d_a == d_N.
CanonicalRealization realize_filter(const FilterForm& f, const DaeForm& dae);

/// Residual r = F(q) L [y; u] from zero filter state. Columns are samples.
MatrixXd apply_filter(const FilterForm& f, const DaeForm& dae,
                      const MatrixXd& y, const MatrixXd& u);

/// Runs x+ = A x + B u from x0, returns outputs y = C x + D u column-wise.
MatrixXd simulate(const Realization& sys, const MatrixXd& u,
                  const VectorXd& x0);

/// Runs the plant from x0 with every input channel given column-wise
/// (zero-row matrices for absent channels). Returns y, one column per sample.
MatrixXd simulate_plant(const StateSpace& sys, const VectorXd& x0,
                        const MatrixXd& u, const MatrixXd& d,
                        const MatrixXd& w, const MatrixXd& f);

/// Zero-order-hold discretization of every input channel of a continuous
/// plant. C, D, Dw, Df are carried over unchanged.
StateSpace discretize_zoh(const StateSpace& continuous, double Ts);

/// SISO transfer function num(s)/den(s) in controllable canonical form.
/// Coefficients ascending in s; deg num < deg den.
StateSpace tf_to_ss(const VectorXd& num, const VectorXd& den);

/// Ascending coefficients of prod (q - r_i), without the leading one.
VectorXd monic_from_roots(const VectorXcd& roots);

/// Polynomial evaluation, ascending coefficients.
template <typename Scalar>
Scalar polyval(const VectorXd& ascending, Scalar x) {
  Scalar acc(0);
  for (Index i = ascending.size() - 1; i >= 0; --i) acc = acc * x + ascending(i);
  return acc;
}

/// a(z) including its implicit leading monic term.
inline cplx eval_denominator(const VectorXd& a, cplx z) {
  return polyval(a, z) + std::pow(z, static_cast<int>(a.size()));
}

}  // namespace ffde
