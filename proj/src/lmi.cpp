#include "ffde/lmi.hpp"

#include <cmath>

namespace ffde {

namespace {

AffineReal constant(const MatrixXd& M) { return AffineReal(M); }

AffineReal eye(Index n) { return AffineReal::identity(n); }

}  // namespace

FrequencyWeight sensitivity_weight(Index n_r, Index n_f, const AffineReal& eta2) {
  require(eta2.rows() == 1 && eta2.cols() == 1,
          "sensitivity_weight: eta2 must be scalar");
  FrequencyWeight w;
  w.Pi11 = -MatrixXd::Identity(n_r, n_r);
  w.Pi12 = MatrixXd::Zero(n_r, n_f);
  w.D = MatrixXd::Zero(n_r, n_f);
  w.Pi22 = times_identity(eta2, n_f);
  return w;
}

FrequencyWeight tracking_weight(Index n_f, const AffineReal& eta3) {
  require(eta3.rows() == 1 && eta3.cols() == 1,
          "tracking_weight: eta3 must be scalar");
  FrequencyWeight w;
  w.Pi11 = MatrixXd::Identity(n_f, n_f);
  w.Pi12 = MatrixXd::Zero(n_f, n_f);
  w.D = -MatrixXd::Identity(n_f, n_f);
  w.Pi22 = -times_identity(eta3, n_f);
  return w;
}

FilterExpr filter_expr(const CanonicalRealization& r) {
  return {constant(r.A), constant(r.Bw), constant(r.Bf), r.C};
}

FilterExpr filter_expr(const AffineReal& a, const AffineReal& Nbar,
                       const DaeForm& dae) {
  const Index blk = a.rows();
  require(a.cols() == 1 && blk >= 1, "filter_expr: a must be a column");
  const Index w = dae.n_eq();
  require(Nbar.cols() == blk * w,
          "filter_expr: numerator width must be (d_N+1)(n_x+n_y)");
  const Index nr = Nbar.rows();

  MatrixXd shift = MatrixXd::Zero(blk, blk - 1);
  if (blk > 1) shift.bottomRows(blk - 1).setIdentity();
  const AffineReal comp = AffineReal::assemble({{constant(shift), -a}});

  std::vector<AffineReal> diag(nr, comp);
  std::vector<std::vector<AffineReal>> rows_w, rows_f;
  for (Index j = 0; j < nr; ++j) {
    for (Index i = 0; i < blk; ++i) {
      const AffineReal Nij = Nbar.block(j, i * w, 1, w);
      rows_w.push_back({-(Nij * dae.W)});
      rows_f.push_back({-(Nij * dae.G)});
    }
  }
  FilterExpr f;
  f.A = AffineReal::block_diagonal(diag);
  f.Bw = dae.W.cols() > 0 ? AffineReal::assemble(rows_w)
                          : AffineReal::zero(nr * blk, 0);
  f.Bf = dae.G.cols() > 0 ? AffineReal::assemble(rows_f)
                          : AffineReal::zero(nr * blk, 0);
  f.C = MatrixXd::Zero(nr, nr * blk);
  for (Index j = 0; j < nr; ++j) f.C(j, j * blk + blk - 1) = 1.0;
  return f;
}

void add_h2_block(ConicProgram& prog, const AffineReal& A, const AffineReal& Bw,
                  const MatrixXd& C, const AffineReal& P1, const AffineReal& Q1,
                  const AffineReal& eta1, double margin, const std::string& tag) {
  if (!A.is_constant() && !P1.is_constant())
    throw Error("bilinear block; fix one set");
  const Index n = A.rows(), nw = Bw.cols(), nr = C.rows();
  const AffineReal AP = A * P1;
  const AffineReal first = AffineReal::assemble(
      {{P1, AP, Bw},
       {AP.transpose(), P1, AffineReal::zero(n, nw)},
       {Bw.transpose(), AffineReal::zero(nw, n), eye(nw)}});
  prog.add_psd(first - margin * eye(2 * n + nw), tag + ":gramian");

  const AffineReal CP = C * P1;
  const AffineReal second =
      AffineReal::assemble({{Q1, CP}, {CP.transpose(), P1}});
  prog.add_psd(second - margin * eye(nr + n), tag + ":output");

  prog.add_nonneg(eta1 - Q1.trace() - constant(MatrixXd::Constant(1, 1, margin)),
                  tag + ":trace");
}

AffineComplex gkyp_matrix(const AffineReal& A, const AffineReal& B,
                          const MatrixXd& C, const FrequencyWeight& w,
                          double theta_c, double theta_d, const AffineComplex& P,
                          const AffineComplex& Q, const AffineReal& V) {
  const Index n = A.rows(), nf = B.cols();
  require(V.rows() == n && V.cols() == 2 * n + nf,
          "gkyp_matrix: V must be n x (2n + n_f)");
  if ((!A.is_constant() || !B.is_constant()) && !V.is_constant())
    throw Error("bilinear block; fix one set");
  const cplx delta = std::polar(1.0, theta_c);

  const MatrixXd CtPi11C = C.transpose() * w.Pi11 * C;
  const MatrixXd off = C.transpose() * (w.Pi11 * w.D + w.Pi12);
  const MatrixXd corner_c = w.D.transpose() * w.Pi11 * w.D +
                            w.D.transpose() * w.Pi12 + w.Pi12.transpose() * w.D;
  const AffineComplex corner =
      AffineComplex(MatrixXcd(corner_c.cast<cplx>())) + w.Pi22.cast_complex();

  const AffineComplex Z_nn = AffineComplex::zero(n, n);
  const AffineComplex Z_nf = AffineComplex::zero(n, nf);
  const AffineComplex mid =
      P - (2.0 * std::cos(theta_d)) * Q +
      AffineComplex(MatrixXcd(CtPi11C.cast<cplx>()));
  const AffineComplex offc(MatrixXcd(off.cast<cplx>()));
  AffineComplex M = AffineComplex::assemble(
      {{-P, delta * Q, Z_nf},
       {std::conj(delta) * Q, mid, offc},
       {Z_nf.adjoint(), offc.adjoint(), corner}});

  const AffineReal Y = AffineReal::assemble(
      {{-eye(n)}, {A.transpose()}, {B.transpose()}});
  const AffineReal YV = Y * V;
  M += (YV + YV.transpose()).cast_complex();
  return M;
}

void add_gkyp_block(ConicProgram& prog, const AffineReal& A, const AffineReal& B,
                    const MatrixXd& C, const FrequencyWeight& w, double theta_c,
                    double theta_d, const AffineComplex& P,
                    const AffineComplex& Q, const AffineReal& V, double margin,
                    const std::string& tag) {
  const AffineComplex M = gkyp_matrix(A, B, C, w, theta_c, theta_d, P, Q, V);
  const Index k = M.rows();
  prog.add_psd(-M - margin * AffineComplex::identity(k), tag + ":frequency");
  prog.add_psd(Q - margin * AffineComplex::identity(Q.rows()),
               tag + ":multiplier");
}

MatrixXd embed_hermitian(const MatrixXcd& M) {
  const Index n = M.rows();
  MatrixXd E(2 * n, 2 * M.cols());
  E << M.real(), -M.imag(), M.imag(), M.real();
  return E;
}

}  // namespace ffde
