#pragma once

#include <string>

#include "ffde/conic.hpp"
#include "ffde/sysmodel.hpp"

namespace ffde {

/// Quadratic frequency weight [T; I]^* Pi [T; I] <= 0 for T = C(zI-A)^{-1}B + D,
/// with Pi = [[Pi11, Pi12], [Pi12^T, Pi22]]. Pi22 may carry a decision variable.
struct FrequencyWeight {
  MatrixXd Pi11, Pi12, D;
  AffineReal Pi22;
};

/// Pi11 = -I, Pi22 = eta2 I, D = 0: sigma_min(T)^2 >= eta2 on the band.
FrequencyWeight sensitivity_weight(Index n_r, Index n_f, const AffineReal& eta2);

/// Pi11 = I, Pi22 = -eta3 I, D = -I: sigma_max(T - I)^2 <= eta3 on the band.
FrequencyWeight tracking_weight(Index n_f, const AffineReal& eta3);

/// Residual-filter dynamics as affine expressions. C is always constant.
struct FilterExpr {
  AffineReal A, Bw, Bf;
  MatrixXd C;
};

/// Constant realization of a fixed filter.
FilterExpr filter_expr(const CanonicalRealization& r);

/// Realization with denominator coefficients `a` ((d+1) x 1) and stacked
/// numerator `Nbar` (n_r x (d+1)(n_x+n_y)) given as expressions.
FilterExpr filter_expr(const AffineReal& a, const AffineReal& Nbar,
                       const DaeForm& dae);

/// H2 constraints
///   [[P1, A P1, Bw], [*, P1, 0], [*, *, I]] >= margin I,
///   [[Q1, C P1], [*, P1]] >= margin I,
///   Trace(Q1) <= eta1 - margin.
/// A and P1 may not both depend on decision variables.
void add_h2_block(ConicProgram& prog, const AffineReal& A, const AffineReal& Bw,
                  const MatrixXd& C, const AffineReal& P1, const AffineReal& Q1,
                  const AffineReal& eta1, double margin,
                  const std::string& tag = "h2");

/// Finsler-augmented middle-frequency GKYP matrix for the band with centre
/// theta_c and half-width theta_d:
///   [[-P, e^{j theta_c} Q, 0],
///    [*, P - 2 cos(theta_d) Q + C^T Pi11 C, C^T (Pi11 D + Pi12)],
///    [*, *, D^T Pi11 D + D^T Pi12 + Pi12^T D + Pi22]]
///   + Y V + V^T Y^T,   Y = [-I; A^T; B^T].
AffineComplex gkyp_matrix(const AffineReal& A, const AffineReal& B,
                          const MatrixXd& C, const FrequencyWeight& w,
                          double theta_c, double theta_d, const AffineComplex& P,
                          const AffineComplex& Q, const AffineReal& V);

/// Adds gkyp_matrix <= -margin I and Q >= margin I.
void add_gkyp_block(ConicProgram& prog, const AffineReal& A, const AffineReal& B,
                    const MatrixXd& C, const FrequencyWeight& w, double theta_c,
                    double theta_d, const AffineComplex& P,
                    const AffineComplex& Q, const AffineReal& V, double margin,
                    const std::string& tag = "gkyp");

/// Hermitian-to-real embedding of a constant matrix.
MatrixXd embed_hermitian(const MatrixXcd& M);

}  // namespace ffde
