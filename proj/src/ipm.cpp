#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <type_traits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "ffde/conic.hpp"

namespace ffde {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using MatrixXe = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
constexpr double kInf = std::numeric_limits<double>::infinity();

double inner(const SpMat& F, const MatrixXd& K) {
  double s = 0.0;
  for (int o = 0; o < F.outerSize(); ++o)
    for (SpMat::InnerIterator it(F, o); it; ++it)
      s += it.value() * K(it.row(), it.col());
  return s;
}

// Same inner product accumulated in extended precision.
long double inner_ext(const SpMat& F, const MatrixXd& K) {
  long double s = 0.0L;
  for (int o = 0; o < F.outerSize(); ++o)
    for (SpMat::InnerIterator it(F, o); it; ++it)
      s += static_cast<long double>(it.value()) * K(it.row(), it.col());
  return s;
}

// W M W in extended precision, rounded and symmetrized.
MatrixXd sandwich_ext(const MatrixXe& W, const MatrixXd& M) {
  const MatrixXe r = W * M.cast<long double>() * W;
  return (0.5L * (r + r.transpose())).cast<double>();
}

void add_scaled(MatrixXd& out, const SpMat& F, double a) {
  for (int o = 0; o < F.outerSize(); ++o)
    for (SpMat::InnerIterator it(F, o); it; ++it)
      out(it.row(), it.col()) += a * it.value();
}

// Largest alpha with X + alpha dX still positive semidefinite (X > 0).
double max_step(const MatrixXd& X, const MatrixXd& dX) {
  if (X.rows() == 0) return kInf;
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd Y = llt.matrixL().solve(dX);
  MatrixXd Z = llt.matrixL().solve(Y.transpose());
  Z = 0.5 * (Z + Z.transpose());
  const double lmin =
      Eigen::SelfAdjointEigenSolver<MatrixXd>(Z, Eigen::EigenvaluesOnly)
          .eigenvalues()(0);
  return lmin >= 0.0 ? kInf : -1.0 / lmin;
}

double max_step(const VectorXd& x, const VectorXd& dx) {
  double a = kInf;
  for (Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  return a;
}

double min_eig(const MatrixXd& S) {
  if (S.rows() == 0) return kInf;
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(S, Eigen::EigenvaluesOnly)
      .eigenvalues()(0);
}

// Schur complement M_ij = <F_i, W F_j W> + LP terms, formed and factored in
// precision T. Solves include iterative refinement against the unregularized
// matrix.
template <typename T>
class SchurSystem {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  SchurSystem(const SdpProblem& p, const std::vector<MatrixXd>& W,
              const SpMat& FlpT, const VectorXd& dlp) {
    M0_ = Mat::Zero(p.m, p.m);
    for (std::size_t k = 0; k < p.blocks.size(); ++k) {
      const auto& F = p.blocks[k].F;
      const Mat Wk = W[k].cast<T>();
      for (std::size_t jj = 0; jj < F.size(); ++jj) {
        const Mat G = (Wk * F[jj].second.cast<T>()) * Wk;
        const Index j = F[jj].first;
        for (std::size_t ii = 0; ii <= jj; ++ii) {
          T v = 0;
          const SpMat& Fi = F[ii].second;
          for (int o = 0; o < Fi.outerSize(); ++o)
            for (SpMat::InnerIterator it(Fi, o); it; ++it)
              v += static_cast<T>(it.value()) * G(it.row(), it.col());
          M0_(F[ii].first, j) += v;
          if (ii != jj) M0_(j, F[ii].first) += v;
        }
      }
    }
    if (dlp.size() > 0)
      M0_ += MatrixXd(FlpT * dlp.asDiagonal() * FlpT.transpose()).cast<T>();
    M0_ = T(0.5) * (M0_ + M0_.transpose());
    Mat M = M0_;
    const T rel = std::is_same_v<T, double> ? T(1e-14) : T(1e-18);
    M.diagonal().array() +=
        rel * std::max(T(1), M.diagonal().cwiseAbs().maxCoeff());
    llt_.compute(M);
    use_llt_ = llt_.info() == Eigen::Success;
    if (!use_llt_) ldlt_.compute(M);
  }

  VectorXd solve(const VectorXd& rhs_d) const {
    const Vec rhs = rhs_d.cast<T>();
    auto raw = [&](const Vec& r) {
      return use_llt_ ? Vec(llt_.solve(r)) : Vec(ldlt_.solve(r));
    };
    Vec d = raw(rhs);
    const T floor = std::numeric_limits<T>::epsilon() * T(10);
    for (int k = 0; k < 3; ++k) {
      const Vec r = rhs - M0_ * d;
      if (r.norm() <= floor * rhs.norm()) break;
      d += raw(r);
    }
    return d.template cast<double>();
  }

 private:
  Mat M0_;
  Eigen::LLT<Mat> llt_;
  Eigen::LDLT<Mat> ldlt_;
  bool use_llt_ = false;
};

// Core method for problems without equality constraints.
SolverResult solve_unscaled(const SdpProblem& p,
                                   const SolverOptions& opts) {
  const Index m = p.m;
  const std::size_t nb = p.blocks.size();
  const Index nlp = p.lp_f0.size();
  Index ntot = nlp;
  for (const auto& b : p.blocks) ntot += b.n;

  SolverResult res;
  res.x = VectorXd::Zero(m);
  if (ntot == 0) {
    res.status = p.c.isZero() ? SolveStatus::Optimal
                              : SolveStatus::NumericalFailure;
    res.message = p.c.isZero() ? "no constraints" : "unbounded: no constraints";
    return res;
  }

  // Variables touching each block, and coefficient norms for scaling.
  double normF0 = p.lp_f0.size() ? p.lp_f0.squaredNorm() : 0.0;
  for (const auto& b : p.blocks) normF0 += b.F0.squaredNorm();
  normF0 = std::sqrt(normF0);
  const double normc = p.c.norm();

  // Starting point in the spirit of SDPT3's default initialization.
  std::vector<MatrixXd> X(nb), S(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto& b = p.blocks[k];
    const double n = static_cast<double>(b.n);
    double xi = std::max(10.0, std::sqrt(n));
    double eta = std::max({10.0, std::sqrt(n), b.F0.norm()});
    for (const auto& [i, F] : b.F) {
      const double nf = F.norm();
      xi = std::max(xi, n * (1.0 + std::abs(p.c(i))) / (1.0 + nf));
      eta = std::max(eta, nf);
    }
    X[k] = xi * MatrixXd::Identity(b.n, b.n);
    S[k] = eta * MatrixXd::Identity(b.n, b.n);
  }
  VectorXd x_lp = VectorXd::Constant(nlp, 10.0);
  VectorXd s_lp = VectorXd::Constant(nlp, 10.0);
  if (nlp > 0) {
    const double lpnorm = std::max(1.0, p.lp_f0.cwiseAbs().maxCoeff());
    s_lp.setConstant(std::max(10.0, lpnorm));
  }
  const SpMat FlpT = p.lp_F.transpose();

  VectorXd y = VectorXd::Zero(m);
  int stalls = 0;
  // Switched on once double precision refinement stops reducing the
  // residual of the assembled direction.
  bool extended = false;
  int last_progress = 0;
  double best_measure = kInf;
  VectorXd best_y = y;
  SolverResult best;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    res.iterations = iter;
    // Residuals.
    std::vector<MatrixXd> Rp(nb);
    double nrp = 0.0, dobj = 0.0, xs = 0.0;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> AXe =
        Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(m);
    for (std::size_t k = 0; k < nb; ++k) {
      const auto& b = p.blocks[k];
      MatrixXd Fy = b.F0;
      for (const auto& [i, F] : b.F) {
        add_scaled(Fy, F, y(i));
        AXe(i) += inner_ext(F, X[k]);
      }
      Rp[k] = Fy - S[k];
      nrp += Rp[k].squaredNorm();
      dobj -= (b.F0.cwiseProduct(X[k])).sum();
      xs += (X[k].cwiseProduct(S[k])).sum();
    }
    VectorXd AX = AXe.cast<double>();
    VectorXd rp_lp;
    if (nlp > 0) {
      rp_lp = p.lp_f0 + p.lp_F * y - s_lp;
      nrp += rp_lp.squaredNorm();
      dobj -= p.lp_f0.dot(x_lp);
      xs += x_lp.dot(s_lp);
      AX += FlpT * x_lp;
    }
    const VectorXd rd = p.c - AX;
    const double pobj = p.c.dot(y);
    const double mu = xs / static_cast<double>(ntot);
    const double relp = std::sqrt(nrp) / (1.0 + normF0);
    const double reld = rd.norm() / (1.0 + normc);
    const double relgap = std::max(std::abs(pobj - dobj), std::max(xs, 0.0)) /
                          (1.0 + std::abs(pobj) + std::abs(dobj));
    const double measure = std::max({relp, reld, relgap});
    if (opts.verbose)
      std::cerr << "ipm " << iter << " pobj " << pobj << " dobj " << dobj
                << " relp " << relp << " reld " << reld << " gap " << relgap
                << "\n";
    res.primal_infeasibility = relp;
    res.dual_infeasibility = reld;
    res.relative_gap = relgap;
    if (measure < 0.5 * best_measure) last_progress = iter;
    if (iter - last_progress > 30) break;
    if (measure < best_measure) {
      best_measure = measure;
      best_y = y;
      best = res;
    }
    if (measure < opts.tol) {
      res.status = SolveStatus::Optimal;
      res.x = y;
      res.message = "converged";
      return res;
    }

    // Infeasibility certificates.
    if (dobj > 0.0 && AX.norm() <= opts.infeas_tol * dobj) {
      res.status = SolveStatus::Infeasible;
      res.x = y;
      res.message = "primal infeasible (dual ray found)";
      return res;
    }
    if (pobj < 0.0) {
      double worst = kInf;
      for (std::size_t k = 0; k < nb; ++k) {
        MatrixXd Ty = MatrixXd::Zero(p.blocks[k].n, p.blocks[k].n);
        for (const auto& [i, F] : p.blocks[k].F) add_scaled(Ty, F, y(i));
        worst = std::min(worst, min_eig(Ty));
      }
      if (nlp > 0) worst = std::min(worst, (p.lp_F * y).minCoeff());
      if (worst >= -opts.infeas_tol * (-pobj) && -pobj > 1e8 * (1.0 + normF0)) {
        res.status = SolveStatus::NumericalFailure;
        res.x = y;
        res.message = "dual infeasible: objective unbounded below";
        return res;
      }
    }

    // Nesterov-Todd scaling per block: R^T S R = R^-1 X R^-T = diag(lambda),
    // W = R R^T satisfies W S W = X.
    std::vector<MatrixXd> R(nb), Rinv(nb), W(nb);
    std::vector<MatrixXe> Re(nb), We(nb);
    std::vector<VectorXd> lam(nb);
    bool factor_ok = true;
    for (std::size_t k = 0; k < nb && factor_ok; ++k) {
      Eigen::LLT<MatrixXd> ls(S[k]), lx(X[k]);
      if (ls.info() != Eigen::Success || lx.info() != Eigen::Success) {
        factor_ok = false;
        break;
      }
      const MatrixXd Lx = lx.matrixL();
      const MatrixXd LsT_Lx = ls.matrixU() * Lx;
      Eigen::JacobiSVD<MatrixXd> svd(LsT_Lx, Eigen::ComputeFullU | Eigen::ComputeFullV);
      lam[k] = svd.singularValues();
      if (lam[k].minCoeff() <= 0.0) {
        factor_ok = false;
        break;
      }
      R[k] = Lx * svd.matrixV() * lam[k].cwiseSqrt().cwiseInverse().asDiagonal();
      Rinv[k] = lam[k].cwiseInverse().asDiagonal() * R[k].transpose() * S[k];
      W[k] = R[k] * R[k].transpose();
      W[k] = 0.5 * (W[k] + W[k].transpose());
      Re[k] = R[k].cast<long double>();
      We[k] = W[k].cast<long double>();
    }
    if (!factor_ok) break;

    // Schur complement M_ij = <F_i, W F_j W>.
    VectorXd dlp;
    if (nlp > 0) dlp = x_lp.cwiseQuotient(s_lp);
    std::optional<SchurSystem<double>> schur_d;
    std::optional<SchurSystem<long double>> schur_e;
    if (extended)
      schur_e.emplace(p, W, FlpT, dlp);
    else
      schur_d.emplace(p, W, FlpT, dlp);
    auto solve_M = [&](const VectorXd& rhs) {
      return schur_e ? schur_e->solve(rhs) : schur_d->solve(rhs);
    };

    struct Direction {
      VectorXd dy;
      std::vector<MatrixXd> dS, dX;
      VectorXd ds, dx;
    };
    // Linearized complementarity in the scaled space:
    //   lambda o (dX~ + dS~) = target I - lambda^2 - corr,
    // with o the symmetrized product.
    auto direction = [&](double target, const Direction* corr) {
      std::vector<MatrixXd> T(nb), Zs(nb);
      VectorXd rhs = -p.c;
      for (std::size_t k = 0; k < nb; ++k) {
        const Index n = p.blocks[k].n;
        MatrixXd H = -MatrixXd(lam[k].cwiseAbs2().asDiagonal());
        H.diagonal().array() += target;
        if (corr) {
          const MatrixXd dXs = Rinv[k] * corr->dX[k] * Rinv[k].transpose();
          const MatrixXd dSs = R[k].transpose() * corr->dS[k] * R[k];
          const MatrixXd P = dXs * dSs;
          H -= 0.5 * (P + P.transpose());
        }
        MatrixXd Z(n, n);
        for (Index j = 0; j < n; ++j)
          for (Index i = 0; i < n; ++i)
            Z(i, j) = 2.0 * H(i, j) / (lam[k](i) + lam[k](j));
        // T = R Z R^T - W Rp W; A(X + T) enters the right-hand side.
        T[k] = R[k] * Z * R[k].transpose() - W[k] * Rp[k] * W[k];
        Zs[k] = Z;
        const MatrixXd XT = X[k] + T[k];
        for (const auto& [i, F] : p.blocks[k].F) rhs(i) += inner(F, XT);
      }
      VectorXd klp;
      if (nlp > 0) {
        klp = (VectorXd::Constant(nlp, target) - x_lp.cwiseProduct(rp_lp))
                  .cwiseQuotient(s_lp);
        if (corr) klp -= corr->dx.cwiseProduct(corr->ds).cwiseQuotient(s_lp);
        rhs += FlpT * klp;
      }
      Direction d;
      d.dy = solve_M(rhs);
      d.dS.resize(nb);
      d.dX.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        d.dS[k] = Rp[k];
        MatrixXd Fdy = MatrixXd::Zero(p.blocks[k].n, p.blocks[k].n);
        for (const auto& [i, F] : p.blocks[k].F) add_scaled(Fdy, F, d.dy(i));
        d.dS[k] += Fdy;
        // dX = R Z R^T - W dS W cancels heavily near the optimum.
        const MatrixXe dX = Re[k] * Zs[k].cast<long double>() * Re[k].transpose() -
                            We[k] * d.dS[k].cast<long double>() * We[k];
        d.dX[k] = (0.5L * (dX + dX.transpose())).cast<double>();
      }
      if (nlp > 0) {
        d.ds = rp_lp + p.lp_F * d.dy;
        d.dx = klp + x_lp.cwiseProduct(rp_lp).cwiseQuotient(s_lp) - x_lp -
               x_lp.cwiseProduct(d.ds).cwiseQuotient(s_lp);
      }
      // Refinement on the assembled residual A(dX) - rd: the Schur matrix is
      // formed from products that lose accuracy when W is badly scaled.
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::Matrix<long double, Eigen::Dynamic, 1> de =
            (AXe - p.c.cast<long double>());
        for (std::size_t k = 0; k < nb; ++k)
          for (const auto& [i, F] : p.blocks[k].F) de(i) += inner_ext(F, d.dX[k]);
        VectorXd delta = de.cast<double>();
        if (nlp > 0) delta += FlpT * d.dx + FlpT * x_lp;
        if (delta.norm() <= 1e-3 * rd.norm()) break;
        if (pass == 1 && reld > 0.01 * opts.tol && delta.norm() > 0.5 * rd.norm())
          extended = true;
        const VectorXd ddy = solve_M(delta);
        d.dy += ddy;
        for (std::size_t k = 0; k < nb; ++k) {
          MatrixXd Fd = MatrixXd::Zero(p.blocks[k].n, p.blocks[k].n);
          for (const auto& [i, F] : p.blocks[k].F) add_scaled(Fd, F, ddy(i));
          d.dS[k] += Fd;
          d.dX[k] -= sandwich_ext(We[k], Fd);
        }
        if (nlp > 0) {
          const VectorXd fd = p.lp_F * ddy;
          d.ds += fd;
          d.dx -= x_lp.cwiseProduct(fd).cwiseQuotient(s_lp);
        }
      }
      return d;
    };
    auto steps = [&](const Direction& d) {
      double ap = kInf, ad = kInf;
      for (std::size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(S[k], d.dS[k]));
        ad = std::min(ad, max_step(X[k], d.dX[k]));
      }
      if (nlp > 0) {
        ap = std::min(ap, max_step(s_lp, d.ds));
        ad = std::min(ad, max_step(x_lp, d.dx));
      }
      return std::pair<double, double>(ap, ad);
    };

    const Direction pred = direction(0.0, nullptr);
    auto [ap_aff, ad_aff] = steps(pred);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);
    double xs_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k)
      xs_aff += ((X[k] + ad_aff * pred.dX[k])
                     .cwiseProduct(S[k] + ap_aff * pred.dS[k]))
                    .sum();
    if (nlp > 0)
      xs_aff += (x_lp + ad_aff * pred.dx).dot(s_lp + ap_aff * pred.ds);
    const double mu_aff = std::max(0.0, xs_aff / static_cast<double>(ntot));
    const double expon =
        std::max(1.0, 3.0 * std::pow(std::min(ap_aff, ad_aff), 2));
    const double sigma =
        mu > 0.0 ? std::clamp(std::pow(mu_aff / mu, expon), 0.0, 1.0) : 0.0;

    const Direction corr = direction(sigma * mu, &pred);
    auto [ap, ad] = steps(corr);
    const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);

    y += ap * corr.dy;
    for (std::size_t k = 0; k < nb; ++k) {
      S[k] += ap * corr.dS[k];
      S[k] = 0.5 * (S[k] + S[k].transpose());
      X[k] += ad * corr.dX[k];
      X[k] = 0.5 * (X[k] + X[k].transpose());
    }
    if (nlp > 0) {
      s_lp += ap * corr.ds;
      x_lp += ad * corr.dx;
    }
    if (opts.verbose)
      std::cerr << "    step " << ap << " " << ad << " sigma " << sigma
                << " |y| " << y.lpNorm<Eigen::Infinity>() << " mu " << mu
                << (extended ? " extended" : "") << "\n";
    if (!y.allFinite()) break;
    stalls = (ap < 1e-8 && ad < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 5) break;
  }

  best.x = best_y;
  const double best_relp = best.primal_infeasibility;
  if (best_relp < opts.tol && best_measure < opts.accept_tol) {
    best.status = SolveStatus::Optimal;
    best.message = "converged to reduced accuracy";
  } else if (res.iterations + 1 >= opts.max_iter) {
    best.status = SolveStatus::MaxIter;
    best.message = "iteration limit reached";
  } else {
    best.status = SolveStatus::NumericalFailure;
    best.message = "stalled before reaching tolerance";
  }
  return best;
}

// Rescales every variable so its constraint coefficients have unit norm.
SolverResult solve_inequality_form(const SdpProblem& p,
                                   const SolverOptions& opts) {
  VectorXd norm2 = VectorXd::Zero(p.m);
  for (const auto& b : p.blocks)
    for (const auto& [i, F] : b.F) norm2(i) += F.squaredNorm();
  if (p.lp_F.rows() > 0)
    for (Index i = 0; i < p.m; ++i) norm2(i) += p.lp_F.col(i).squaredNorm();
  VectorXd d(p.m);
  for (Index i = 0; i < p.m; ++i)
    d(i) = norm2(i) > 0.0 ? 1.0 / std::sqrt(norm2(i)) : 1.0;
  SdpProblem q = p;
  q.c = p.c.cwiseProduct(d);
  for (auto& b : q.blocks)
    for (auto& [i, F] : b.F) F *= d(i);
  if (q.lp_F.rows() > 0) q.lp_F = q.lp_F * d.asDiagonal();
  SolverResult r = solve_unscaled(q, opts);
  r.x = r.x.cwiseProduct(d);
  r.objective = p.c.dot(r.x);
  return r;
}

}  // namespace

SolverResult InteriorPointBackend::solve(const SdpProblem& p,
                                         const SolverOptions& opts) const {
  require(p.c.size() == p.m, "ipm: objective size mismatch");
  if (p.Aeq.rows() == 0) return solve_inequality_form(p, opts);

  // Eliminate A y = b through y = y0 + K t.
  Eigen::JacobiSVD<MatrixXd> svd(p.Aeq, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& sv = svd.singularValues();
  const double cutoff = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  VectorXd y0 = VectorXd::Zero(p.m);
  {
    const VectorXd ub = svd.matrixU().leftCols(rank).transpose() * p.beq;
    y0 = svd.matrixV().leftCols(rank) *
         ub.cwiseQuotient(sv.head(rank));
  }
  SolverResult res;
  if ((p.Aeq * y0 - p.beq).norm() > 1e-9 * (1.0 + p.beq.norm())) {
    res.status = SolveStatus::Infeasible;
    res.x = y0;
    res.message = "inconsistent equality constraints";
    return res;
  }
  const MatrixXd K = svd.matrixV().rightCols(p.m - rank);

  SdpProblem q;
  q.m = K.cols();
  q.c = K.transpose() * p.c;
  for (const auto& b : p.blocks) {
    SdpProblem::Block r;
    r.name = b.name;
    r.n = b.n;
    r.F0 = b.F0;
    for (const auto& [i, F] : b.F) add_scaled(r.F0, F, y0(i));
    for (Index t = 0; t < q.m; ++t) {
      MatrixXd D = MatrixXd::Zero(b.n, b.n);
      for (const auto& [i, F] : b.F)
        if (K(i, t) != 0.0) add_scaled(D, F, K(i, t));
      SpMat s = D.sparseView(1.0, 1e-14);
      if (s.nonZeros() > 0) r.F.emplace_back(t, s);
    }
    q.blocks.push_back(std::move(r));
  }
  if (p.lp_f0.size() > 0) {
    q.lp_f0 = p.lp_f0 + p.lp_F * y0;
    q.lp_F = (MatrixXd(p.lp_F) * K).sparseView(1.0, 1e-14);
  } else {
    q.lp_F.resize(0, q.m);
  }
  SolverResult r = solve_inequality_form(q, opts);
  r.x = y0 + K * r.x;
  return r;
}

}  // namespace ffde
