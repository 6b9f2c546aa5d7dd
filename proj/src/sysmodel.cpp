#include "ffde/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace ffde {

namespace {

void check_shape(const MatrixXd& m, Index rows, Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << "StateSpace: " << name << " is " << m.rows() << "x" << m.cols()
        << ", expected " << rows << "x" << cols;
    throw Error(msg.str());
  }
}

}  // namespace

void StateSpace::validate() const {
  const Index n = nx();
  require(n > 0, "StateSpace: n_x must be positive");
  require(ny() > 0, "StateSpace: n_y must be positive");
  check_shape(A, n, n, "A");
  check_shape(B, n, nu(), "B");
  check_shape(Bd, n, nd(), "Bd");
  check_shape(Bw, n, nw(), "Bw");
  check_shape(Bf, n, nf(), "Bf");
  check_shape(C, ny(), n, "C");
  check_shape(D, ny(), nu(), "D");
  check_shape(Dw, ny(), nw(), "Dw");
  check_shape(Df, ny(), nf(), "Df");
  require(A.allFinite() && B.allFinite() && Bd.allFinite() && Bw.allFinite() &&
              Bf.allFinite() && C.allFinite() && D.allFinite() &&
              Dw.allFinite() && Df.allFinite(),
          "StateSpace: non-finite entries");
}

StateSpace StateSpace::zeros(Index nx, Index nu, Index nd, Index nw, Index nf,
                             Index ny) {
  StateSpace s;
  s.A = MatrixXd::Zero(nx, nx);
  s.B = MatrixXd::Zero(nx, nu);
  s.Bd = MatrixXd::Zero(nx, nd);
  s.Bw = MatrixXd::Zero(nx, nw);
  s.Bf = MatrixXd::Zero(nx, nf);
  s.C = MatrixXd::Zero(ny, nx);
  s.D = MatrixXd::Zero(ny, nu);
  s.Dw = MatrixXd::Zero(ny, nw);
  s.Df = MatrixXd::Zero(ny, nf);
  return s;
}

MatrixXd FilterForm::stacked() const {
  require(!N.empty(), "FilterForm: empty numerator");
  MatrixXd out(n_r(), width() * static_cast<Index>(N.size()));
  for (std::size_t i = 0; i < N.size(); ++i) {
    require(N[i].rows() == n_r() && N[i].cols() == width(),
            "FilterForm: inconsistent numerator blocks");
    out.middleCols(static_cast<Index>(i) * width(), width()) = N[i];
  }
  return out;
}

FilterForm FilterForm::from_stacked(const MatrixXd& stacked_numerator,
                                    const VectorXd& a) {
  const Index blocks = a.size();
  require(blocks > 0 && stacked_numerator.cols() % blocks == 0,
          "FilterForm: stacked numerator width not a multiple of d_N+1");
  FilterForm f;
  f.a = a;
  const Index w = stacked_numerator.cols() / blocks;
  for (Index i = 0; i < blocks; ++i)
    f.N.push_back(stacked_numerator.middleCols(i * w, w));
  return f;
}

VectorXcd FilterForm::poles() const {
  if (a.size() == 0) return VectorXcd();
  return companion(a).eigenvalues();
}

double FilterForm::spectral_radius() const {
  const VectorXcd p = poles();
  return p.size() == 0 ? 0.0 : p.cwiseAbs().maxCoeff();
}

Realization CanonicalRealization::noise_channel() const {
  return {A, Bw, C, MatrixXd::Zero(C.rows(), Bw.cols())};
}

Realization CanonicalRealization::fault_channel() const {
  return {A, Bf, C, MatrixXd::Zero(C.rows(), Bf.cols())};
}

DaeForm to_dae(const StateSpace& sys) {
  sys.validate();
  const Index nx = sys.nx(), ny = sys.ny(), nd = sys.nd(), nu = sys.nu();
  DaeForm dae;
  dae.H0 = MatrixXd::Zero(nx + ny, nx + nd);
  dae.H0.topLeftCorner(nx, nx) = sys.A;
  dae.H0.topRightCorner(nx, nd) = sys.Bd;
  dae.H0.bottomLeftCorner(ny, nx) = sys.C;

  dae.H1 = MatrixXd::Zero(nx + ny, nx + nd);
  dae.H1.topLeftCorner(nx, nx) = -MatrixXd::Identity(nx, nx);

  dae.L = MatrixXd::Zero(nx + ny, ny + nu);
  dae.L.topRightCorner(nx, nu) = sys.B;
  dae.L.bottomLeftCorner(ny, ny) = -MatrixXd::Identity(ny, ny);
  dae.L.bottomRightCorner(ny, nu) = sys.D;

  dae.W.resize(nx + ny, sys.nw());
  dae.W << sys.Bw, sys.Dw;
  dae.G.resize(nx + ny, sys.nf());
  dae.G << sys.Bf, sys.Df;
  return dae;
}

MatrixXd stack_nullspace(const DaeForm& dae, int d_N) {
  require(d_N >= 0, "stack_nullspace: d_N must be nonnegative");
  const Index m = dae.n_eq(), n = dae.n_unknown();
  MatrixXd Hbar = MatrixXd::Zero((d_N + 1) * m, (d_N + 2) * n);
  for (int i = 0; i <= d_N; ++i) {
    Hbar.block(i * m, i * n, m, n) = dae.H0;
    Hbar.block(i * m, (i + 1) * n, m, n) = dae.H1;
  }
  return Hbar;
}

MatrixXd left_null_basis(const MatrixXd& M, double rel_tol) {
  const Index m = M.rows();
  if (M.cols() == 0) return MatrixXd::Identity(m, m);
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeFullU);
  const VectorXd& sv = svd.singularValues();
  const double cutoff = rel_tol * (sv.size() ? sv(0) : 0.0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  const Index dim = m - rank;
  MatrixXd out(dim, m);
  for (Index i = 0; i < dim; ++i) out.row(i) = svd.matrixU().col(m - 1 - i).transpose();
  return out;
}

VectorXd repeated_root(double root, int n) {
  return monic_from_roots(VectorXcd::Constant(n, cplx(root, 0.0)));
}

MatrixXd companion(const VectorXd& a) {
  const Index n = a.size();
  MatrixXd Ac = MatrixXd::Zero(n, n);
  if (n > 1) Ac.bottomLeftCorner(n - 1, n - 1).setIdentity();
  Ac.col(n - 1) = -a;
  return Ac;
}

Realization realize_channel(const FilterForm& f, const MatrixXd& M,
                            double sign) {
  require(f.d_a() == f.d_N(),
          "realize_filter: d_a must equal d_N (fixed-equal degrees)");
  require(f.width() == M.rows(), "realize_filter: input map height mismatch");
  const Index blk = f.d_N() + 1;
  const Index nr = f.n_r();
  const Index n = nr * blk;
  Realization r;
  r.A = MatrixXd::Zero(n, n);
  r.B = MatrixXd::Zero(n, M.cols());
  r.C = MatrixXd::Zero(nr, n);
  r.D = MatrixXd::Zero(nr, M.cols());
  const MatrixXd Ac = companion(f.a);
  for (Index j = 0; j < nr; ++j) {
    r.A.block(j * blk, j * blk, blk, blk) = Ac;
    for (Index i = 0; i < blk; ++i)
      r.B.row(j * blk + i) = sign * f.N[i].row(j) * M;
    r.C(j, j * blk + blk - 1) = 1.0;
  }
  return r;
}

CanonicalRealization realize_filter(const FilterForm& f, const DaeForm& dae) {
  const Realization w = realize_channel(f, dae.W, -1.0);
  const Realization g = realize_channel(f, dae.G, -1.0);
  return {w.A, w.B, g.B, w.C};
}

MatrixXd simulate(const Realization& sys, const MatrixXd& u,
                  const VectorXd& x0) {
  require(u.rows() == sys.inputs(), "simulate: input dimension mismatch");
  require(x0.size() == sys.order(), "simulate: initial state size mismatch");
  MatrixXd y(sys.outputs(), u.cols());
  VectorXd x = x0;
  for (Index k = 0; k < u.cols(); ++k) {
    y.col(k) = sys.C * x + sys.D * u.col(k);
    x = sys.A * x + sys.B * u.col(k);
  }
  return y;
}

MatrixXd apply_filter(const FilterForm& f, const DaeForm& dae,
                      const MatrixXd& y, const MatrixXd& u) {
  require(y.cols() == u.cols(), "apply_filter: y and u length mismatch");
  const Index ny = dae.L.cols() - u.rows();
  require(y.rows() == ny, "apply_filter: output dimension mismatch");
  require(f.spectral_radius() < 1.0, "apply_filter: unstable filter");
  const Realization r = realize_channel(f, dae.L, 1.0);
  MatrixXd yu(y.rows() + u.rows(), y.cols());
  yu << y, u;
  return simulate(r, yu, VectorXd::Zero(r.order()));
}

MatrixXd simulate_plant(const StateSpace& sys, const VectorXd& x0,
                        const MatrixXd& u, const MatrixXd& d,
                        const MatrixXd& w, const MatrixXd& f) {
  const Index T = std::max({u.cols(), d.cols(), w.cols(), f.cols()});
  auto check = [T](const MatrixXd& m, Index rows, const char* name) {
    require(m.rows() == rows && (m.cols() == T || rows == 0),
            std::string("simulate_plant: bad shape for ") + name);
  };
  check(u, sys.nu(), "u");
  check(d, sys.nd(), "d");
  check(w, sys.nw(), "w");
  check(f, sys.nf(), "f");
  require(x0.size() == sys.nx(), "simulate_plant: initial state size mismatch");
  auto column = [](const MatrixXd& m, Index k) {
    return m.rows() == 0 ? VectorXd() : VectorXd(m.col(k));
  };
  MatrixXd y(sys.ny(), T);
  VectorXd x = x0;
  for (Index k = 0; k < T; ++k) {
    VectorXd yk = sys.C * x;
    VectorXd xn = sys.A * x;
    if (sys.nu()) {
      yk += sys.D * column(u, k);
      xn += sys.B * column(u, k);
    }
    if (sys.nd()) xn += sys.Bd * column(d, k);
    if (sys.nw()) {
      yk += sys.Dw * column(w, k);
      xn += sys.Bw * column(w, k);
    }
    if (sys.nf()) {
      yk += sys.Df * column(f, k);
      xn += sys.Bf * column(f, k);
    }
    y.col(k) = yk;
    x = xn;
  }
  return y;
}

StateSpace discretize_zoh(const StateSpace& c, double Ts) {
  require(Ts > 0.0, "discretize_zoh: sample period must be positive");
  c.validate();
  const Index n = c.nx();
  const Index m = c.nu() + c.nd() + c.nw() + c.nf();
  const double growth =
      n ? c.A.eigenvalues().real().maxCoeff() * Ts : 0.0;
  require(growth < 700.0,
          "discretize_zoh: matrix exponential overflows (fast unstable mode)");
  MatrixXd aug = MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = c.A;
  aug.topRightCorner(n, m) << c.B, c.Bd, c.Bw, c.Bf;
  const MatrixXd E = (aug * Ts).exp();
  require(E.allFinite(), "discretize_zoh: matrix exponential not finite");
  StateSpace d = c;
  d.A = E.topLeftCorner(n, n);
  Index col = n;
  d.B = E.block(0, col, n, c.nu());
  col += c.nu();
  d.Bd = E.block(0, col, n, c.nd());
  col += c.nd();
  d.Bw = E.block(0, col, n, c.nw());
  col += c.nw();
  d.Bf = E.block(0, col, n, c.nf());
  d.sample_period = Ts;
  return d;
}

StateSpace tf_to_ss(const VectorXd& num, const VectorXd& den) {
  const Index n = den.size() - 1;
  require(n >= 1, "tf_to_ss: denominator degree must be at least 1");
  require(den(n) != 0.0, "tf_to_ss: leading denominator coefficient is zero");
  require(num.size() <= n, "tf_to_ss: transfer function must be strictly proper");
  StateSpace s = StateSpace::zeros(n, 1, 0, 0, 0, 1);
  if (n > 1) s.A.topRightCorner(n - 1, n - 1).setIdentity();
  for (Index i = 0; i < n; ++i) s.A(n - 1, i) = -den(i) / den(n);
  s.B(n - 1, 0) = 1.0;
  for (Index i = 0; i < num.size(); ++i) s.C(0, i) = num(i) / den(n);
  return s;
}

VectorXd monic_from_roots(const VectorXcd& roots) {
  // Coefficients of prod (q - r), ascending, leading 1 included during build.
  VectorXcd c = VectorXcd::Zero(roots.size() + 1);
  c(0) = 1.0;
  for (Index k = 0; k < roots.size(); ++k) {
    VectorXcd next = VectorXcd::Zero(c.size());
    for (Index i = 0; i <= k; ++i) {
      next(i + 1) += c(i);
      next(i) -= roots(k) * c(i);
    }
    c = next;
  }
  VectorXd a(roots.size());
  for (Index i = 0; i < roots.size(); ++i) {
    require(std::abs(c(i).imag()) < 1e-9 * (1.0 + std::abs(c(i))),
            "monic_from_roots: roots are not closed under conjugation");
    a(i) = c(i).real();
  }
  return a;
}

}  // namespace ffde
