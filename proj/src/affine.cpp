#include "ffde/affine.hpp"

#include <algorithm>

namespace ffde {

namespace {

template <typename F>
AffineReal map_complex(const AffineComplex& m, F part) {
  AffineReal out{MatrixXd(m.constant().unaryExpr(part))};
  for (const auto& [k, v] : m.terms()) {
    Eigen::SparseMatrix<double> s = v.unaryExpr(part);
    s.prune(0.0);
    if (s.nonZeros() > 0) out.add_term(k, s);
  }
  return out;
}

}  // namespace

AffineReal real_part(const AffineComplex& m) {
  return map_complex(m, [](const cplx& z) { return z.real(); });
}

AffineReal imag_part(const AffineComplex& m) {
  return map_complex(m, [](const cplx& z) { return z.imag(); });
}

AffineReal times_identity(const AffineReal& s, Index n) {
  require(s.rows() == 1 && s.cols() == 1, "times_identity: scalar expected");
  AffineReal out(MatrixXd(s.constant()(0, 0) * MatrixXd::Identity(n, n)));
  for (const auto& [k, v] : s.terms()) {
    const double c = MatrixXd(v)(0, 0);
    Eigen::SparseMatrix<double> d(n, n);
    for (Index i = 0; i < n; ++i) d.insert(i, i) = c;
    out.add_term(k, d);
  }
  return out;
}

AffineReal vectorize(const AffineReal& m) {
  std::vector<std::vector<AffineReal>> grid;
  for (Index c = 0; c < m.cols(); ++c) grid.push_back({m.col(c)});
  if (grid.empty()) return AffineReal::zero(0, 1);
  return AffineReal::assemble(grid);
}

AffineReal symmetric_part(const AffineReal& m) {
  return 0.5 * (m + m.transpose());
}

double hermitian_defect(const AffineComplex& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  double d = (m.constant() - m.constant().adjoint()).cwiseAbs().maxCoeff();
  for (const auto& [k, v] : m.terms()) {
    const Eigen::SparseMatrix<cplx> diff = v - Eigen::SparseMatrix<cplx>(v.adjoint());
    for (int o = 0; o < diff.outerSize(); ++o)
      for (Eigen::SparseMatrix<cplx>::InnerIterator it(diff, o); it; ++it)
        d = std::max(d, std::abs(it.value()));
  }
  return d;
}

double symmetric_defect(const AffineReal& m) {
  return hermitian_defect(m.cast_complex());
}

}  // namespace ffde
