#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "ffde/affine.hpp"

namespace ffde {

enum class VarKind { Scalar, Matrix, Symmetric, Hermitian };

/// A named block of scalar decision variables inside a ConicProgram.
struct Variable {
  std::string name;
  VarKind kind = VarKind::Scalar;
  Index offset = 0;  // first scalar index
  Index count = 0;   // number of scalar unknowns
  Index rows = 1, cols = 1;
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure, MaxIter };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double tol = 1e-8;        // relative primal/dual feasibility and gap
  int max_iter = 100000;    // hard cap; stagnation ends runs much earlier
  double infeas_tol = 1e-8;  // certificate threshold for infeasibility
  /// A stalled run whose best iterate is primal feasible (relative residual
  /// below tol) and within this relative gap is still reported Optimal.
  double accept_tol = 1e-5;
  bool verbose = false;
};

struct SolverResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  VectorXd x;                  // scalar variable values
  double objective = 0.0;      // including any constant offset
  double max_violation = 0.0;  // largest PSD/LP/equality violation at x
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  std::string message;

  bool ok() const { return status == SolveStatus::Optimal; }
};

/// Solver-facing data in linear-matrix-inequality form:
///   minimize c^T y  s.t.  F0_b + sum_i y_i F_ib >= 0 for every PSD block b,
///   f0 + Flp y >= 0 elementwise,  Aeq y = beq.
struct SdpProblem {
  struct Block {
    std::string name;
    Index n = 0;
    MatrixXd F0;
    std::vector<std::pair<Index, Eigen::SparseMatrix<double>>> F;
  };
  Index m = 0;
  VectorXd c;
  std::vector<Block> blocks;
  VectorXd lp_f0;
  Eigen::SparseMatrix<double> lp_F;  // rows: LP constraints, cols: m
  MatrixXd Aeq;
  VectorXd beq;

  /// Largest constraint violation of a candidate point (negative minimum
  /// eigenvalue, negative LP slack, or equality residual).
  double violation(const VectorXd& y) const;
};

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual std::string name() const = 0;
  virtual SolverResult solve(const SdpProblem& p,
                             const SolverOptions& opts) const = 0;
};

/// Primal-dual path-following method (Nesterov-Todd direction, Mehrotra
/// predictor-corrector, infeasible start).
class InteriorPointBackend : public ConicBackend {
 public:
  std::string name() const override { return "ipm-nt"; }
  SolverResult solve(const SdpProblem& p,
                     const SolverOptions& opts) const override;
};

/// Test backend: reports whether a fixed candidate point is feasible.
class NullBackend : public ConicBackend {
 public:
  explicit NullBackend(VectorXd candidate) : candidate_(std::move(candidate)) {}
  std::string name() const override { return "null"; }
  SolverResult solve(const SdpProblem& p,
                     const SolverOptions& opts) const override;

 private:
  VectorXd candidate_;
};

/// Modeling layer: variable registry, linear objective, equalities,
/// PSD constraints on symmetric (or Hermitian, embedded) affine expressions.
class ConicProgram {
 public:
  Variable add_scalar(const std::string& name);
  Variable add_matrix(const std::string& name, Index rows, Index cols);
  Variable add_symmetric(const std::string& name, Index n);
  Variable add_hermitian(const std::string& name, Index n);

  /// Real expression of a scalar, matrix or symmetric variable.
  AffineReal expr(const Variable& v) const;
  /// Complex expression of any variable kind.
  AffineComplex cexpr(const Variable& v) const;

  void minimize(const AffineReal& objective);
  void add_equality(const AffineReal& e, const std::string& name = "");
  /// e >= 0 in the PSD sense; e must be symmetric.
  void add_psd(const AffineReal& e, const std::string& name = "");
  /// Hermitian e >= 0, added through its real embedding.
  void add_psd(const AffineComplex& e, const std::string& name = "");
  /// Every entry of e is nonnegative.
  void add_nonneg(const AffineReal& e, const std::string& name = "");

  Index num_scalars() const { return n_; }
  const std::vector<Variable>& variables() const { return vars_; }
  std::size_t num_psd() const { return psd_.size(); }

  SdpProblem lower() const;
  SolverResult solve(const ConicBackend& backend,
                     const SolverOptions& opts = {}) const;
  SolverResult solve(const SolverOptions& opts = {}) const;

  MatrixXd value(const Variable& v, const VectorXd& x) const;
  MatrixXcd cvalue(const Variable& v, const VectorXd& x) const;
  double value(const AffineReal& e, const VectorXd& x) const;

  /// Sparse SDPA-like text: counts, block sizes, objective, then
  /// "matrix block row col value" lines for the upper triangles, with
  /// equalities written as pairs of diagonal (LP) rows.
  void write_sdpa(std::ostream& os) const;

  /// Strictness margin used by the constraint builders (informational).
  double margin = 1e-6;

 private:
  Variable reserve(const std::string& name, VarKind kind, Index count,
                   Index rows, Index cols);

  Index n_ = 0;
  std::vector<Variable> vars_;
  AffineReal objective_{AffineReal::zero(1, 1)};
  std::vector<std::pair<std::string, AffineReal>> psd_;
  std::vector<std::pair<std::string, AffineReal>> nonneg_;
  std::vector<std::pair<std::string, AffineReal>> eq_;
};

/// [[Re M, -Im M], [Im M, Re M]]. Throws when M is not Hermitian
/// (coefficient defect above 1e-12 relative to its scale).
AffineReal embed_hermitian(const AffineComplex& m);

}  // namespace ffde
