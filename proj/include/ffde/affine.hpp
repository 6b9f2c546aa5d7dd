#pragma once

#include <map>
#include <vector>

#include <Eigen/SparseCore>

#include "ffde/types.hpp"

namespace ffde {

/// Matrix-valued affine function of real decision variables,
///   M(x) = M0 + sum_k x_k M_k,
/// with a dense constant term and sparse per-variable coefficients.
/// Products of two non-constant expressions are rejected.
template <typename Scalar>
class AffineMatrix {
 public:
  using Dense = Matrix<Scalar>;
  using Sparse = Eigen::SparseMatrix<Scalar>;
  using Terms = std::map<Index, Sparse>;

  AffineMatrix() = default;
  AffineMatrix(Index rows, Index cols) : constant_(Dense::Zero(rows, cols)) {}
  explicit AffineMatrix(const Dense& constant) : constant_(constant) {}

  static AffineMatrix zero(Index rows, Index cols) {
    return AffineMatrix(rows, cols);
  }
  static AffineMatrix identity(Index n) {
    return AffineMatrix(Dense(Dense::Identity(n, n)));
  }

  Index rows() const { return constant_.rows(); }
  Index cols() const { return constant_.cols(); }
  bool is_constant() const { return terms_.empty(); }
  const Dense& constant() const { return constant_; }
  const Terms& terms() const { return terms_; }

  /// Adds x_var * coef to the expression.
  void add_term(Index var, const Sparse& coef) {
    require(coef.rows() == rows() && coef.cols() == cols(),
            "AffineMatrix: coefficient shape mismatch");
    auto it = terms_.find(var);
    if (it == terms_.end())
      terms_.emplace(var, coef);
    else
      it->second += coef;
  }

  /// Single-entry coefficient convenience.
  void add_entry(Index var, Index r, Index c, Scalar value) {
    Sparse s(rows(), cols());
    s.insert(r, c) = value;
    add_term(var, s);
  }

  AffineMatrix& operator+=(const AffineMatrix& o) {
    check_same_shape(o);
    constant_ += o.constant_;
    for (const auto& [k, v] : o.terms_) add_term(k, v);
    return *this;
  }
  AffineMatrix& operator-=(const AffineMatrix& o) { return *this += -o; }

  friend AffineMatrix operator+(AffineMatrix a, const AffineMatrix& b) {
    a += b;
    return a;
  }
  friend AffineMatrix operator-(AffineMatrix a, const AffineMatrix& b) {
    a -= b;
    return a;
  }
  AffineMatrix operator-() const { return scaled(Scalar(-1)); }

  AffineMatrix scaled(Scalar s) const {
    AffineMatrix out(Dense(constant_ * s));
    for (const auto& [k, v] : terms_) out.terms_.emplace(k, Sparse(v * s));
    return out;
  }
  friend AffineMatrix operator*(Scalar s, const AffineMatrix& a) {
    return a.scaled(s);
  }
  friend AffineMatrix operator*(const AffineMatrix& a, Scalar s) {
    return a.scaled(s);
  }

  friend AffineMatrix operator*(const Dense& L, const AffineMatrix& a) {
    require(L.cols() == a.rows(), "AffineMatrix: product shape mismatch");
    AffineMatrix out(Dense(L * a.constant_));
    for (const auto& [k, v] : a.terms_)
      out.terms_.emplace(k, Sparse((L * v).sparseView()));
    return out;
  }
  friend AffineMatrix operator*(const AffineMatrix& a, const Dense& R) {
    require(a.cols() == R.rows(), "AffineMatrix: product shape mismatch");
    AffineMatrix out(Dense(a.constant_ * R));
    for (const auto& [k, v] : a.terms_)
      out.terms_.emplace(k, Sparse((v * R).sparseView()));
    return out;
  }

  /// Product of two expressions; at least one side must be constant.
  friend AffineMatrix operator*(const AffineMatrix& a, const AffineMatrix& b) {
    if (a.is_constant()) return a.constant_ * b;
    if (b.is_constant()) return a * b.constant_;
    throw Error("bilinear block; fix one set");
  }

  AffineMatrix transpose() const {
    AffineMatrix out(Dense(constant_.transpose()));
    for (const auto& [k, v] : terms_)
      out.terms_.emplace(k, Sparse(v.transpose()));
    return out;
  }
  AffineMatrix adjoint() const {
    AffineMatrix out(Dense(constant_.adjoint()));
    for (const auto& [k, v] : terms_) out.terms_.emplace(k, Sparse(v.adjoint()));
    return out;
  }

  AffineMatrix block(Index r0, Index c0, Index nr, Index nc) const {
    AffineMatrix out(Dense(constant_.block(r0, c0, nr, nc)));
    for (const auto& [k, v] : terms_) {
      Sparse b = v.block(r0, c0, nr, nc);
      if (b.nonZeros() > 0) out.terms_.emplace(k, b);
    }
    return out;
  }
  AffineMatrix row(Index r) const { return block(r, 0, 1, cols()); }
  AffineMatrix col(Index c) const { return block(0, c, rows(), 1); }

  /// 1x1 expression of the trace.
  AffineMatrix trace() const {
    require(rows() == cols(), "AffineMatrix: trace of non-square expression");
    AffineMatrix out(Dense::Constant(1, 1, constant_.trace()));
    for (const auto& [k, v] : terms_) {
      Scalar t(0);
      for (int o = 0; o < v.outerSize(); ++o)
        for (typename Sparse::InnerIterator it(v, o); it; ++it)
          if (it.row() == it.col()) t += it.value();
      if (t != Scalar(0)) out.add_entry(k, 0, 0, t);
    }
    return out;
  }

  Dense evaluate(const VectorXd& x) const {
    Dense out = constant_;
    for (const auto& [k, v] : terms_) {
      require(k < x.size(), "AffineMatrix: variable index out of range");
      out += Scalar(x(k)) * Dense(v);
    }
    return out;
  }

  AffineMatrix<cplx> cast_complex() const {
    AffineMatrix<cplx> out(MatrixXcd(constant_.template cast<cplx>()));
    for (const auto& [k, v] : terms_)
      out.add_term(k, Eigen::SparseMatrix<cplx>(v.template cast<cplx>()));
    return out;
  }

  /// Largest variable index used plus one.
  Index var_extent() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first + 1;
  }

  /// Block matrix from a grid of expressions; row heights and column widths
  /// must agree across the grid.
  static AffineMatrix assemble(
      const std::vector<std::vector<AffineMatrix>>& grid) {
    require(!grid.empty() && !grid.front().empty(),
            "AffineMatrix::assemble: empty grid");
    const std::size_t nbr = grid.size(), nbc = grid.front().size();
    std::vector<Index> h(nbr), w(nbc);
    for (std::size_t i = 0; i < nbr; ++i) {
      require(grid[i].size() == nbc, "AffineMatrix::assemble: ragged grid");
      h[i] = grid[i][0].rows();
    }
    for (std::size_t j = 0; j < nbc; ++j) w[j] = grid[0][j].cols();
    Index R = 0, C = 0;
    for (Index v : h) R += v;
    for (Index v : w) C += v;

    Dense constant = Dense::Zero(R, C);
    std::map<Index, std::vector<Eigen::Triplet<Scalar>>> trip;
    Index r0 = 0;
    for (std::size_t i = 0; i < nbr; ++i) {
      Index c0 = 0;
      for (std::size_t j = 0; j < nbc; ++j) {
        const AffineMatrix& b = grid[i][j];
        require(b.rows() == h[i] && b.cols() == w[j],
                "AffineMatrix::assemble: block shape mismatch");
        constant.block(r0, c0, h[i], w[j]) = b.constant_;
        for (const auto& [k, v] : b.terms_) {
          auto& t = trip[k];
          for (int o = 0; o < v.outerSize(); ++o)
            for (typename Sparse::InnerIterator it(v, o); it; ++it)
              t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
        }
        c0 += w[j];
      }
      r0 += h[i];
    }
    AffineMatrix out(constant);
    for (auto& [k, t] : trip) {
      Sparse s(R, C);
      s.setFromTriplets(t.begin(), t.end());
      out.terms_.emplace(k, std::move(s));
    }
    return out;
  }

  static AffineMatrix block_diagonal(const std::vector<AffineMatrix>& diag) {
    std::vector<std::vector<AffineMatrix>> grid(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i)
      for (std::size_t j = 0; j < diag.size(); ++j)
        grid[i].push_back(i == j ? diag[i]
                                 : zero(diag[i].rows(), diag[j].cols()));
    return assemble(grid);
  }

 private:
  void check_same_shape(const AffineMatrix& o) const {
    require(rows() == o.rows() && cols() == o.cols(),
            "AffineMatrix: shape mismatch in sum");
  }

  Dense constant_;
  Terms terms_;
};

using AffineReal = AffineMatrix<double>;
using AffineComplex = AffineMatrix<cplx>;

/// Real and imaginary parts of a complex expression (variables are real).
AffineReal real_part(const AffineComplex& m);
AffineReal imag_part(const AffineComplex& m);

/// s * I_n for a 1x1 expression s.
AffineReal times_identity(const AffineReal& s, Index n);

/// Stacks the columns of m into one column.
AffineReal vectorize(const AffineReal& m);

/// Symmetric part (M + M^T) / 2.
AffineReal symmetric_part(const AffineReal& m);

/// Largest entry of M - M^* over the constant and all coefficients.
double hermitian_defect(const AffineComplex& m);
double symmetric_defect(const AffineReal& m);

}  // namespace ffde
