#include "ffde/conic.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <Eigen/Eigenvalues>

namespace ffde {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::NumericalFailure:
      return "numerical-failure";
    case SolveStatus::MaxIter:
      return "max-iter";
  }
  return "unknown";
}

double SdpProblem::violation(const VectorXd& y) const {
  require(y.size() == m, "SdpProblem::violation: wrong point size");
  double v = 0.0;
  for (const Block& b : blocks) {
    MatrixXd S = b.F0;
    for (const auto& [i, Fi] : b.F) S += y(i) * MatrixXd(Fi);
    if (b.n == 0) continue;
    const double lmin =
        Eigen::SelfAdjointEigenSolver<MatrixXd>(S, Eigen::EigenvaluesOnly)
            .eigenvalues()(0);
    v = std::max(v, -lmin);
  }
  if (lp_f0.size() > 0) {
    const VectorXd s = lp_f0 + lp_F * y;
    v = std::max(v, -s.minCoeff());
  }
  if (Aeq.rows() > 0) v = std::max(v, (Aeq * y - beq).cwiseAbs().maxCoeff());
  return v;
}

SolverResult NullBackend::solve(const SdpProblem& p,
                                const SolverOptions& opts) const {
  SolverResult r;
  require(candidate_.size() == p.m, "NullBackend: candidate has wrong size");
  r.x = candidate_;
  r.objective = p.c.dot(candidate_);
  r.max_violation = p.violation(candidate_);
  r.status = r.max_violation <= opts.tol ? SolveStatus::Optimal
                                         : SolveStatus::Infeasible;
  r.message = "candidate point evaluated";
  return r;
}

Variable ConicProgram::reserve(const std::string& name, VarKind kind,
                               Index count, Index rows, Index cols) {
  Variable v{name, kind, n_, count, rows, cols};
  n_ += count;
  vars_.push_back(v);
  return v;
}

Variable ConicProgram::add_scalar(const std::string& name) {
  return reserve(name, VarKind::Scalar, 1, 1, 1);
}

Variable ConicProgram::add_matrix(const std::string& name, Index rows,
                                  Index cols) {
  return reserve(name, VarKind::Matrix, rows * cols, rows, cols);
}

Variable ConicProgram::add_symmetric(const std::string& name, Index n) {
  return reserve(name, VarKind::Symmetric, n * (n + 1) / 2, n, n);
}

Variable ConicProgram::add_hermitian(const std::string& name, Index n) {
  return reserve(name, VarKind::Hermitian, n * n, n, n);
}

AffineReal ConicProgram::expr(const Variable& v) const {
  require(v.kind != VarKind::Hermitian,
          "ConicProgram::expr: Hermitian variable needs cexpr");
  AffineReal e = AffineReal::zero(v.rows, v.cols);
  Index k = v.offset;
  switch (v.kind) {
    case VarKind::Scalar:
      e.add_entry(k, 0, 0, 1.0);
      break;
    case VarKind::Matrix:
      for (Index c = 0; c < v.cols; ++c)
        for (Index r = 0; r < v.rows; ++r) e.add_entry(k++, r, c, 1.0);
      break;
    case VarKind::Symmetric:
      for (Index c = 0; c < v.cols; ++c)
        for (Index r = 0; r <= c; ++r) {
          Eigen::SparseMatrix<double> s(v.rows, v.cols);
          s.insert(r, c) = 1.0;
          if (r != c) s.insert(c, r) = 1.0;
          e.add_term(k++, s);
        }
      break;
    case VarKind::Hermitian:
      break;
  }
  return e;
}

AffineComplex ConicProgram::cexpr(const Variable& v) const {
  if (v.kind != VarKind::Hermitian) return expr(v).cast_complex();
  AffineComplex e = AffineComplex::zero(v.rows, v.cols);
  Index k = v.offset;
  const cplx j(0.0, 1.0);
  for (Index c = 0; c < v.cols; ++c)
    for (Index r = 0; r <= c; ++r) {
      Eigen::SparseMatrix<cplx> s(v.rows, v.cols);
      s.insert(r, c) = 1.0;
      if (r != c) s.insert(c, r) = 1.0;
      e.add_term(k++, s);
    }
  for (Index c = 0; c < v.cols; ++c)
    for (Index r = 0; r < c; ++r) {
      Eigen::SparseMatrix<cplx> s(v.rows, v.cols);
      s.insert(r, c) = j;
      s.insert(c, r) = -j;
      e.add_term(k++, s);
    }
  return e;
}

void ConicProgram::minimize(const AffineReal& objective) {
  require(objective.rows() == 1 && objective.cols() == 1,
          "ConicProgram::minimize: objective must be 1x1");
  objective_ = objective;
}

void ConicProgram::add_equality(const AffineReal& e, const std::string& name) {
  eq_.emplace_back(name, e);
}

void ConicProgram::add_psd(const AffineReal& e, const std::string& name) {
  require(e.rows() == e.cols(), "add_psd: expression must be square");
  double scale = std::max(1.0, e.constant().cwiseAbs().maxCoeff());
  require(symmetric_defect(e) <= 1e-10 * scale,
          "add_psd: expression '" + name + "' is not symmetric");
  psd_.emplace_back(name, symmetric_part(e));
}

void ConicProgram::add_psd(const AffineComplex& e, const std::string& name) {
  add_psd(embed_hermitian(e), name);
}

void ConicProgram::add_nonneg(const AffineReal& e, const std::string& name) {
  nonneg_.emplace_back(name, e);
}

namespace {

// Scatter every entry of e into rows of a (constant, coefficient) table.
void flatten(const AffineReal& e, std::vector<double>& f0,
             std::vector<Eigen::Triplet<double>>& trip, Index row0) {
  const Index r = e.rows(), c = e.cols();
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) f0.push_back(e.constant()(i, j));
  for (const auto& [k, v] : e.terms())
    for (int o = 0; o < v.outerSize(); ++o)
      for (Eigen::SparseMatrix<double>::InnerIterator it(v, o); it; ++it)
        trip.emplace_back(row0 + it.col() * r + it.row(), k, it.value());
}

}  // namespace

SdpProblem ConicProgram::lower() const {
  SdpProblem p;
  p.m = n_;
  p.c = VectorXd::Zero(n_);
  for (const auto& [k, v] : objective_.terms()) p.c(k) += MatrixXd(v)(0, 0);

  for (const auto& [name, e] : psd_) {
    SdpProblem::Block b;
    b.name = name;
    b.n = e.rows();
    b.F0 = e.constant();
    for (const auto& [k, v] : e.terms()) {
      Eigen::SparseMatrix<double> s = v;
      s.prune(0.0);
      if (s.nonZeros() > 0) b.F.emplace_back(k, s);
    }
    p.blocks.push_back(std::move(b));
  }

  std::vector<double> f0;
  std::vector<Eigen::Triplet<double>> trip;
  Index rows = 0;
  for (const auto& [name, e] : nonneg_) {
    flatten(e, f0, trip, rows);
    rows += e.rows() * e.cols();
  }
  p.lp_f0 = Eigen::Map<VectorXd>(f0.data(), static_cast<Index>(f0.size()));
  p.lp_F.resize(rows, n_);
  p.lp_F.setFromTriplets(trip.begin(), trip.end());

  f0.clear();
  trip.clear();
  rows = 0;
  for (const auto& [name, e] : eq_) {
    flatten(e, f0, trip, rows);
    rows += e.rows() * e.cols();
  }
  Eigen::SparseMatrix<double> A(rows, n_);
  A.setFromTriplets(trip.begin(), trip.end());
  p.Aeq = MatrixXd(A);
  p.beq = -Eigen::Map<VectorXd>(f0.data(), static_cast<Index>(f0.size()));
  return p;
}

SolverResult ConicProgram::solve(const ConicBackend& backend,
                                 const SolverOptions& opts) const {
  const SdpProblem p = lower();
  SolverResult r;
  try {
    r = backend.solve(p, opts);
  } catch (const std::exception& ex) {
    r.status = SolveStatus::NumericalFailure;
    r.message = std::string(backend.name()) + ": " + ex.what();
    r.x = VectorXd::Zero(n_);
    return r;
  }
  if (r.x.size() == n_) {
    r.objective = value(objective_, r.x);
    r.max_violation = p.violation(r.x);
  }
  return r;
}

SolverResult ConicProgram::solve(const SolverOptions& opts) const {
  return solve(InteriorPointBackend(), opts);
}

MatrixXd ConicProgram::value(const Variable& v, const VectorXd& x) const {
  return expr(v).evaluate(x);
}

MatrixXcd ConicProgram::cvalue(const Variable& v, const VectorXd& x) const {
  return cexpr(v).evaluate(x);
}

double ConicProgram::value(const AffineReal& e, const VectorXd& x) const {
  return e.evaluate(x)(0, 0);
}

void ConicProgram::write_sdpa(std::ostream& os) const {
  const SdpProblem p = lower();
  const Index lp_rows = p.lp_f0.size() + 2 * p.Aeq.rows();
  const Index nblocks =
      static_cast<Index>(p.blocks.size()) + (lp_rows > 0 ? 1 : 0);
  os.precision(17);
  os << "* ffde conic program: min c'y s.t. sum_i y_i F_i - F_0 >= 0\n";
  os << p.m << "\n" << nblocks << "\n";
  for (const auto& b : p.blocks) os << b.n << ' ';
  if (lp_rows > 0) os << -lp_rows;
  os << "\n";
  for (Index i = 0; i < p.m; ++i) os << p.c(i) << (i + 1 < p.m ? ' ' : '\n');
  if (p.m == 0) os << "\n";

  auto emit = [&](Index mat, Index blk, Index r, Index c, double v) {
    if (v != 0.0)
      os << mat << ' ' << blk << ' ' << r + 1 << ' ' << c + 1 << ' ' << v
         << "\n";
  };
  Index blk = 1;
  for (const auto& b : p.blocks) {
    for (Index c = 0; c < b.n; ++c)
      for (Index r = 0; r <= c; ++r) emit(0, blk, r, c, -b.F0(r, c));
    for (const auto& [k, F] : b.F)
      for (int o = 0; o < F.outerSize(); ++o)
        for (Eigen::SparseMatrix<double>::InnerIterator it(F, o); it; ++it)
          if (it.row() <= it.col())
            emit(k + 1, blk, it.row(), it.col(), it.value());
    ++blk;
  }
  if (lp_rows > 0) {
    const Index nlp = p.lp_f0.size();
    for (Index r = 0; r < nlp; ++r) emit(0, blk, r, r, -p.lp_f0(r));
    const Eigen::SparseMatrix<double, Eigen::RowMajor> F = p.lp_F;
    for (Index r = 0; r < nlp; ++r)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(F, r);
           it; ++it)
        emit(it.col() + 1, blk, r, r, it.value());
    for (Index e = 0; e < p.Aeq.rows(); ++e) {
      const Index up = nlp + 2 * e, lo = up + 1;
      emit(0, blk, up, up, p.beq(e));
      emit(0, blk, lo, lo, -p.beq(e));
      for (Index k = 0; k < p.m; ++k) {
        emit(k + 1, blk, up, up, p.Aeq(e, k));
        emit(k + 1, blk, lo, lo, -p.Aeq(e, k));
      }
    }
  }
}

AffineReal embed_hermitian(const AffineComplex& m) {
  require(m.rows() == m.cols(), "embed_hermitian: expression must be square");
  double scale = 1.0;
  if (m.constant().size() > 0)
    scale = std::max(scale, m.constant().cwiseAbs().maxCoeff());
  for (const auto& [k, v] : m.terms())
    for (int o = 0; o < v.outerSize(); ++o)
      for (Eigen::SparseMatrix<cplx>::InnerIterator it(v, o); it; ++it)
        scale = std::max(scale, std::abs(it.value()));
  require(hermitian_defect(m) <= 1e-12 * scale,
          "embed_hermitian: non-Hermitian input");
  const AffineReal re = real_part(m), im = imag_part(m);
  return AffineReal::assemble({{re, -im}, {im, re}});
}

}  // namespace ffde
