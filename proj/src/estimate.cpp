#include "ffde/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ffde/lmi.hpp"
#include "ffde/lyapunov.hpp"

namespace ffde {

SampleRule parse_sample_rule(const std::string& s) {
  if (s == "midpoint") return SampleRule::Midpoint;
  if (s == "endpoints") return SampleRule::Endpoints;
  throw Error("unknown sample rule '" + s + "' (midpoint|endpoints)");
}

const char* to_string(SampleRule r) {
  return r == SampleRule::Midpoint ? "midpoint" : "endpoints";
}

VectorXd EstimSpec::denominator() const {
  if (a.size() > 0) return a;
  return repeated_root(0.1, d_N + 1);
}

std::vector<double> EstimSpec::sample_set() const {
  if (!samples.empty()) return samples;
  return sample_points(bands, samples_per_band, rule);
}

std::vector<double> sample_points(const FrequencyBands& bands, int per_band,
                                  SampleRule rule) {
  require(per_band >= 1, "sample_points: need at least one sample per band");
  std::vector<double> out;
  for (const auto& [lo, hi] : bands.bands()) {
    if (rule == SampleRule::Endpoints) {
      if (per_band == 1) {
        out.push_back(0.5 * (lo + hi));
        continue;
      }
      for (int i = 0; i < per_band; ++i)
        out.push_back(lo + (hi - lo) * i / (per_band - 1));
    } else {
      for (int i = 0; i < per_band; ++i)
        out.push_back(lo + (hi - lo) * (i + 0.5) / per_band);
    }
  }
  return out;
}

std::vector<double> nested_samples(double lo, double hi, int count) {
  require(count >= 0, "nested_samples: negative count");
  require(lo <= hi, "nested_samples: empty interval");
  std::vector<double> out;
  for (unsigned k = 1; static_cast<int>(out.size()) < count; ++k) {
    // Radical inverse of k in base 2.
    double v = 0.0, f = 0.5;
    for (unsigned n = k; n; n >>= 1, f *= 0.5)
      if (n & 1u) v += f;
    out.push_back(lo + (hi - lo) * v);
  }
  return out;
}

namespace {

struct Setup {
  DaeForm dae;
  MatrixXd Hbar;
  MatrixXd basis;  // rows span the left null space of Hbar
  VectorXd a;
  Index nf = 0;
};

Setup prepare(const EstimSpec& spec) {
  spec.plant.validate();
  require(spec.d_N >= 0, "estimation: d_N must be nonnegative");
  require(spec.beta >= 0.0 && spec.beta <= 1.0,
          "estimation: beta must lie in [0, 1]");
  require(spec.bands.size() > 0, "estimation: no frequency bands");
  Setup s;
  s.dae = to_dae(spec.plant);
  s.Hbar = stack_nullspace(s.dae, spec.d_N);
  s.basis = left_null_basis(s.Hbar);
  s.a = spec.denominator();
  require(s.a.size() == spec.d_N + 1,
          "estimation: denominator must have d_N + 1 coefficients");
  require(spectral_radius(companion(s.a)) < 1.0,
          "estimation: denominator is not Schur stable");
  s.nf = spec.plant.nf();
  require(s.nf > 0, "estimation: plant has no fault channel");
  return s;
}

bool include_noise(const EstimSpec& spec) {
  return spec.beta > 0.0 || spec.optimize_denominator;
}

double noise_trace(const Setup& s, const EstimSpec& spec, const MatrixXd& N) {
  if (s.dae.W.cols() == 0) return 0.0;
  const MatrixXd Phi = phi_matrix(s.a, s.dae.W, spec.d_N);
  return (N * Phi * N.transpose()).trace();
}

// Cholesky-like factor L with Phi = L L^T (Phi is only semidefinite).
MatrixXd psd_factor(const MatrixXd& Phi) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Phi);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

struct Multipliers {
  std::vector<MatrixXcd> P, Q;
  std::vector<MatrixXd> V;
  MatrixXd P1;
};

struct StepResult {
  SolverResult res;
  double eta1 = 0.0, eta3 = 0.0;
  Multipliers mult;
  FilterForm filter;
};

void set_objective(ConicProgram& prog, const EstimSpec& spec,
                   const AffineReal& eta1, const AffineReal& eta3,
                   bool noise) {
  if (noise && spec.beta > 0.0)
    prog.minimize(spec.beta * eta1 + (1.0 - spec.beta) * eta3);
  else
    prog.minimize(eta3);
}

// Filter fixed; multipliers and bounds free.
StepResult multiplier_step(const Setup& s, const EstimSpec& spec,
                           const FilterForm& filter) {
  const bool noise = include_noise(spec);
  const CanonicalRealization r = realize_filter(filter, s.dae);
  const FilterExpr fe = filter_expr(r);
  const Index n = r.A.rows();

  ConicProgram prog;
  const Variable e3 = prog.add_scalar("eta3");
  const AffineReal eta3 = prog.expr(e3);
  Variable p1, q1, e1;
  AffineReal eta1 = AffineReal::zero(1, 1);
  if (noise) {
    p1 = prog.add_symmetric("P1", n);
    q1 = prog.add_symmetric("Q1", s.nf);
    e1 = prog.add_scalar("eta1");
    eta1 = prog.expr(e1);
    add_h2_block(prog, fe.A, fe.Bw, fe.C, prog.expr(p1), prog.expr(q1), eta1,
                 spec.margin);
  }
  const FrequencyWeight w = tracking_weight(s.nf, eta3);
  std::vector<Variable> P, Q, V;
  for (std::size_t m = 0; m < spec.bands.size(); ++m) {
    const std::string tag = "band" + std::to_string(m);
    P.push_back(prog.add_hermitian("P_" + tag, n));
    Q.push_back(prog.add_hermitian("Q_" + tag, n));
    V.push_back(prog.add_matrix("V_" + tag, n, 2 * n + s.nf));
    add_gkyp_block(prog, fe.A, fe.Bf, fe.C, w, spec.bands.center(m),
                   spec.bands.half_width(m), prog.cexpr(P.back()),
                   prog.cexpr(Q.back()), prog.expr(V.back()), spec.margin,
                   tag);
  }
  set_objective(prog, spec, eta1, eta3, noise);

  StepResult out;
  out.res = prog.solve(spec.solver);
  out.filter = filter;
  if (!out.res.x.size()) return out;
  const VectorXd& x = out.res.x;
  out.eta3 = prog.value(eta3, x);
  out.eta1 = noise ? prog.value(eta1, x) : 0.0;
  if (noise) out.mult.P1 = prog.value(p1, x);
  for (std::size_t m = 0; m < P.size(); ++m) {
    out.mult.P.push_back(prog.cvalue(P[m], x));
    out.mult.Q.push_back(prog.cvalue(Q[m], x));
    out.mult.V.push_back(prog.value(V[m], x));
  }
  return out;
}

// Multipliers (and P1) fixed; numerator, optionally denominator, bounds free.
StepResult filter_step(const Setup& s, const EstimSpec& spec,
                       const Multipliers& mult, const FilterForm& current) {
  const bool noise = include_noise(spec);
  ConicProgram prog;
  const Variable zv = prog.add_matrix("Z", s.nf, s.basis.rows());
  const AffineReal Nbar = prog.expr(zv) * s.basis;
  Variable av;
  AffineReal a(MatrixXd(current.a));
  if (spec.optimize_denominator) {
    av = prog.add_matrix("a", current.a.size(), 1);
    a = prog.expr(av);
  }
  const FilterExpr fe = filter_expr(a, Nbar, s.dae);
  const Variable e3 = prog.add_scalar("eta3");
  const AffineReal eta3 = prog.expr(e3);
  AffineReal eta1 = AffineReal::zero(1, 1);
  if (noise) {
    const Variable q1 = prog.add_symmetric("Q1", s.nf);
    const Variable e1 = prog.add_scalar("eta1");
    eta1 = prog.expr(e1);
    add_h2_block(prog, fe.A, fe.Bw, fe.C, AffineReal(mult.P1), prog.expr(q1),
                 eta1, spec.margin);
  }
  const FrequencyWeight w = tracking_weight(s.nf, eta3);
  for (std::size_t m = 0; m < spec.bands.size(); ++m) {
    add_gkyp_block(prog, fe.A, fe.Bf, fe.C, w, spec.bands.center(m),
                   spec.bands.half_width(m), AffineComplex(mult.P[m]),
                   AffineComplex(mult.Q[m]), AffineReal(mult.V[m]), spec.margin,
                   "band" + std::to_string(m));
  }
  set_objective(prog, spec, eta1, eta3, noise);

  StepResult out;
  out.res = prog.solve(spec.solver);
  if (!out.res.x.size()) return out;
  const VectorXd& x = out.res.x;
  out.eta3 = prog.value(eta3, x);
  out.eta1 = noise ? prog.value(eta1, x) : 0.0;
  const VectorXd anew =
      spec.optimize_denominator ? VectorXd(prog.value(av, x)) : current.a;
  out.filter = FilterForm::from_stacked(prog.value(zv, x) * s.basis, anew);
  return out;
}

double step_objective(const EstimSpec& spec, const StepResult& r) {
  return include_noise(spec) && spec.beta > 0.0
             ? spec.beta * r.eta1 + (1.0 - spec.beta) * r.eta3
             : r.eta3;
}

}  // namespace

EstimReport synthesize_sampled(const EstimSpec& spec) {
  const Setup s = prepare(spec);
  EstimReport rep;
  rep.method = "sampled";
  rep.samples = spec.sample_set();
  require(!rep.samples.empty(), "synthesize_sampled: empty sample set");
  if (s.basis.rows() < s.nf) {
    rep.status = SolveStatus::Infeasible;
    rep.message = "nullspace dimension " + std::to_string(s.basis.rows()) +
                  " is below n_f = " + std::to_string(s.nf);
    return rep;
  }

  const PsiSamples ps = psi_g_samples(s.a, s.dae.G, spec.d_N, rep.samples);
  ConicProgram prog;
  prog.margin = spec.margin;
  const Variable zv = prog.add_matrix("Z", s.nf, s.basis.rows());
  const Variable e3 = prog.add_scalar("eta3");
  const AffineReal Z = prog.expr(zv);
  const AffineReal eta3 = prog.expr(e3);
  const Index nf = s.nf;
  const AffineReal I = AffineReal::identity(nf);
  const AffineReal eye2 = AffineReal::identity(2 * nf);
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    const AffineReal NR = Z * MatrixXd(s.basis * ps.re[i]) - I;
    const AffineReal NI = Z * MatrixXd(s.basis * ps.im[i]);
    const AffineReal M = AffineReal::assemble({{NR, -NI}, {NI, NR}});
    prog.add_psd(AffineReal::assemble({{times_identity(eta3, 2 * nf),
                                        M.transpose()},
                                       {M, eye2}}),
                 "sample" + std::to_string(i));
  }
  const bool noise = spec.beta > 0.0 && s.dae.W.cols() > 0;
  AffineReal eta1 = AffineReal::zero(1, 1);
  if (noise) {
    const Variable e1 = prog.add_scalar("eta1");
    eta1 = prog.expr(e1);
    const MatrixXd L = psd_factor(phi_matrix(s.a, s.dae.W, spec.d_N));
    const AffineReal v = vectorize(Z * MatrixXd(s.basis * L));
    prog.add_psd(AffineReal::assemble(
                     {{eta1, v.transpose()},
                      {v, AffineReal::identity(v.rows())}}),
                 "noise");
    prog.minimize(spec.beta * eta1 + (1.0 - spec.beta) * eta3);
  } else {
    prog.minimize(eta3);
  }

  const SolverResult res = prog.solve(spec.solver);
  rep.status = res.status;
  rep.iterations = res.iterations;
  rep.message = res.message;
  if (res.x.size() == 0) return rep;
  const MatrixXd N = prog.value(zv, res.x) * s.basis;
  rep.filter = FilterForm::from_stacked(N, s.a);
  rep.eta3 = prog.value(eta3, res.x);
  rep.eta1 = noise ? prog.value(eta1, res.x) : noise_trace(s, spec, N);
  rep.trace = {rep.objective(spec.beta)};
  return rep;
}

MatrixXd closed_form(const EstimSpec& spec) {
  const Setup s = prepare(spec);
  const std::vector<double> theta = spec.sample_set();
  require(!theta.empty(), "closed_form: empty sample set");
  const PsiSamples ps = psi_g_samples(s.a, s.dae.G, spec.d_N, theta);
  const Index h = s.Hbar.rows(), k = s.Hbar.cols(), nf = s.nf;
  const double kappa = static_cast<double>(theta.size());
  const double c = 4.0 * (1.0 - spec.beta) / kappa;

  MatrixXd sumRR = MatrixXd::Zero(h, h);
  MatrixXd sumR = MatrixXd::Zero(nf, h);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    sumRR += ps.re[i] * ps.re[i].transpose() + ps.im[i] * ps.im[i].transpose();
    sumR += ps.re[i].transpose();
  }
  MatrixXd Phi = MatrixXd::Zero(h, h);
  if (spec.beta > 0.0 && s.dae.W.cols() > 0)
    Phi = phi_matrix(s.a, s.dae.W, spec.d_N);

  MatrixXd K = MatrixXd::Zero(h + k, h + k);
  K.topLeftCorner(h, h) = 2.0 * spec.beta * Phi + c * sumRR;
  K.topRightCorner(h, k) = s.Hbar;
  K.bottomLeftCorner(k, h) = s.Hbar.transpose();

  Eigen::JacobiSVD<MatrixXd> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const double cut = 1e-10 * (sv.size() ? sv(0) : 0.0);
  VectorXd inv = VectorXd::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  const MatrixXd Kp = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();

  MatrixXd lhs = MatrixXd::Zero(nf, h + k);
  lhs.leftCols(h) = c * sumR;
  return lhs * Kp.leftCols(h);
}

double frobenius_objective(const EstimSpec& spec, const MatrixXd& Nbar) {
  const Setup s = prepare(spec);
  const std::vector<double> theta = spec.sample_set();
  const PsiSamples ps = psi_g_samples(s.a, s.dae.G, spec.d_N, theta);
  const MatrixXd I = MatrixXd::Identity(s.nf, s.nf);
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const MatrixXd NR = Nbar * ps.re[i] - I, NI = Nbar * ps.im[i];
    MatrixXd M(2 * s.nf, 2 * s.nf);
    M << NR, -NI, NI, NR;
    acc += M.squaredNorm();
  }
  double noise = 0.0;
  if (spec.beta > 0.0) noise = noise_trace(s, spec, Nbar);
  return spec.beta * noise +
         (1.0 - spec.beta) / static_cast<double>(theta.size()) * acc;
}

EstimReport certify_estimator(const EstimSpec& spec, const FilterForm& filter) {
  const Setup s = prepare(spec);
  require(filter.n_r() == s.nf, "certify_estimator: residual dimension must equal n_f");
  require(filter.d_a() == filter.d_N(),
          "certify_estimator: filter needs d_a == d_N");
  EstimReport rep;
  rep.method = "certificate";
  rep.filter = filter;
  if (filter.spectral_radius() >= 1.0) {
    rep.status = SolveStatus::Infeasible;
    rep.message = "filter denominator is not Schur stable";
    return rep;
  }
  const StepResult r = multiplier_step(s, spec, filter);
  rep.status = r.res.status;
  rep.iterations = r.res.iterations;
  rep.message = r.res.message;
  rep.eta3 = r.eta3;
  rep.eta1 = include_noise(spec) ? r.eta1
                                 : noise_trace(s, spec, filter.stacked());
  if (rep.ok()) rep.trace = {step_objective(spec, r)};
  return rep;
}

EstimReport synthesize_exact(const EstimSpec& spec, const FilterForm& init) {
  const Setup s = prepare(spec);
  EstimReport rep;
  rep.method = "exact";
  if (s.basis.rows() < s.nf) {
    rep.status = SolveStatus::Infeasible;
    rep.message = "nullspace dimension below n_f";
    return rep;
  }
  require(init.n_r() == s.nf && init.d_N() == spec.d_N &&
              init.width() == s.dae.n_eq(),
          "synthesize_exact: initial filter has the wrong shape");

  StepResult best = multiplier_step(s, spec, init);
  if (!best.res.ok()) {
    rep.status = best.res.status;
    rep.message = "infeasible initialization (gkyp/h2 multiplier step): " +
                  best.res.message;
    return rep;
  }
  double best_obj = step_objective(spec, best);
  rep.trace.push_back(best_obj);
  StepResult cur = best;
  int it = 0;
  for (it = 1; it <= spec.max_iter; ++it) {
    const StepResult fs = filter_step(s, spec, cur.mult, cur.filter);
    if (!fs.res.ok() || fs.filter.spectral_radius() >= 1.0) {
      rep.message = "filter step stopped: " + fs.res.message;
      break;
    }
    StepResult ms = multiplier_step(s, spec, fs.filter);
    if (!ms.res.ok()) {
      rep.message = "multiplier step stopped: " + ms.res.message;
      break;
    }
    const double obj = step_objective(spec, ms);
    if (obj > best_obj) {
      rep.message = "multiplier step did not improve the objective";
      break;
    }
    rep.trace.push_back(obj);
    const double prev = best_obj;
    best = ms;
    best_obj = obj;
    cur = std::move(ms);
    if (prev - obj < spec.ao_tol) break;
  }
  rep.iterations = std::min(it, spec.max_iter);
  rep.status = SolveStatus::Optimal;
  rep.filter = best.filter;
  rep.eta3 = best.eta3;
  rep.eta1 = include_noise(spec) ? best.eta1
                                 : noise_trace(s, spec, best.filter.stacked());
  return rep;
}

GapReport suboptimality_gap(const EstimSpec& spec) {
  require(!spec.optimize_denominator,
          "suboptimality_gap: the denominator must stay fixed");
  GapReport g;
  g.sampled = synthesize_sampled(spec);
  g.lower_ok = g.sampled.ok();
  if (g.lower_ok) g.lower = g.sampled.objective(spec.beta);
  if (!g.lower_ok) return g;
  g.exact = synthesize_exact(spec, g.sampled.filter);
  g.upper_ok = g.exact.ok();
  if (g.upper_ok) g.upper = g.exact.objective(spec.beta);
  return g;
}

std::vector<double> sample_errors(const FilterForm& f, const DaeForm& dae,
                                  const std::vector<double>& theta) {
  const MatrixXd N = f.stacked();
  const MatrixXcd I = MatrixXcd::Identity(f.n_r(), dae.G.cols());
  std::vector<double> out;
  out.reserve(theta.size());
  for (double th : theta) {
    const MatrixXcd T = N.cast<cplx>() * psi(f.a, dae.G, f.d_N(), th) - I;
    out.push_back(Eigen::JacobiSVD<MatrixXcd>(T).singularValues()(0));
  }
  return out;
}

void write_sample_csv(std::ostream& os, const std::vector<double>& theta,
                      const std::vector<double>& err) {
  require(theta.size() == err.size(), "write_sample_csv: length mismatch");
  os << "theta,error_norm\n";
  os.precision(17);
  for (std::size_t i = 0; i < theta.size(); ++i)
    os << theta[i] << ',' << err[i] << '\n';
}

}  // namespace ffde
