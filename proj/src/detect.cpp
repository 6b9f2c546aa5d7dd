#include "ffde/detect.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ffde/lmi.hpp"
#include "ffde/lyapunov.hpp"

namespace ffde {

VectorXd DetectSpec::initial_denominator() const {
  if (roots.empty()) return repeated_root(0.1, d_N + 1);
  require(static_cast<int>(roots.size()) == d_N + 1,
          "detection: need d_N + 1 denominator roots");
  VectorXcd r(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) r(i) = roots[i];
  return monic_from_roots(r);
}

MatrixXd init_numerator(const MatrixXd& Hbar, int n_r) {
  require(n_r >= 1, "init_numerator: n_r must be positive");
  const MatrixXd basis = left_null_basis(Hbar);
  if (basis.rows() < n_r)
    throw Error("no decoupling freedom: left null space has dimension " +
                std::to_string(basis.rows()) + " < n_r = " +
                std::to_string(n_r));
  MatrixXd N = basis.topRows(n_r);
  return N / N.cwiseAbs().maxCoeff();
}

namespace {

struct Setup {
  DaeForm dae;
  MatrixXd Hbar, basis;
};

Setup prepare(const DetectSpec& spec) {
  spec.plant.validate();
  require(spec.alpha >= 0.0 && spec.alpha <= 1.0,
          "detection: alpha must lie in [0, 1]");
  require(spec.d_N >= 0 && spec.n_r >= 1, "detection: need d_N >= 0, n_r >= 1");
  require(spec.bands.size() > 0, "detection: no frequency bands");
  require(spec.plant.nf() > 0, "detection: plant has no fault channel");
  Setup s;
  s.dae = to_dae(spec.plant);
  s.Hbar = stack_nullspace(s.dae, spec.d_N);
  s.basis = left_null_basis(s.Hbar);
  return s;
}

struct Multipliers {
  MatrixXd P1;
  std::vector<MatrixXd> V;
};

struct StepResult {
  SolverResult res;
  double eta1 = 0.0, eta2 = 0.0;
  Multipliers mult;
  FilterForm filter;
};

double objective(const DetectSpec& spec, double eta1, double eta2) {
  return spec.alpha * eta1 - (1.0 - spec.alpha) * eta2;
}

StepResult multiplier_step(const Setup& s, const DetectSpec& spec,
                           const FilterForm& filter) {
  const CanonicalRealization r = realize_filter(filter, s.dae);
  const FilterExpr fe = filter_expr(r);
  const Index n = r.A.rows(), nr = filter.n_r();
  const Index nf = spec.plant.nf();

  ConicProgram prog;
  const Variable p1 = prog.add_symmetric("P1", n);
  const Variable q1 = prog.add_symmetric("Q1", nr);
  const Variable e1 = prog.add_scalar("eta1");
  const Variable e2 = prog.add_scalar("eta2");
  const AffineReal eta1 = prog.expr(e1), eta2 = prog.expr(e2);
  add_h2_block(prog, fe.A, fe.Bw, fe.C, prog.expr(p1), prog.expr(q1), eta1,
               spec.margin);
  const FrequencyWeight w = sensitivity_weight(nr, nf, eta2);
  std::vector<Variable> V;
  for (std::size_t m = 0; m < spec.bands.size(); ++m) {
    const std::string tag = "band" + std::to_string(m);
    const Variable P = prog.add_hermitian("P_" + tag, n);
    const Variable Q = prog.add_hermitian("Q_" + tag, n);
    V.push_back(prog.add_matrix("V_" + tag, n, 2 * n + nf));
    add_gkyp_block(prog, fe.A, fe.Bf, fe.C, w, spec.bands.center(m),
                   spec.bands.half_width(m), prog.cexpr(P), prog.cexpr(Q),
                   prog.expr(V.back()), spec.margin, tag);
  }
  prog.minimize(spec.alpha * eta1 - (1.0 - spec.alpha) * eta2);

  StepResult out;
  out.res = prog.solve(spec.solver);
  out.filter = filter;
  if (out.res.x.size() == 0) return out;
  const VectorXd& x = out.res.x;
  out.eta1 = prog.value(eta1, x);
  out.eta2 = prog.value(eta2, x);
  out.mult.P1 = prog.value(p1, x);
  for (const Variable& v : V) out.mult.V.push_back(prog.value(v, x));
  return out;
}

StepResult filter_step(const Setup& s, const DetectSpec& spec,
                       const Multipliers& mult, Index nr, Index blk) {
  const Index nf = spec.plant.nf();
  const Index n = nr * blk;
  ConicProgram prog;
  const Variable zv = prog.add_matrix("Z", nr, s.basis.rows());
  const Variable av = prog.add_matrix("a", blk, 1);
  const Variable q1 = prog.add_symmetric("Q1", nr);
  const Variable e1 = prog.add_scalar("eta1");
  const Variable e2 = prog.add_scalar("eta2");
  const AffineReal Nbar = prog.expr(zv) * s.basis;
  const AffineReal eta1 = prog.expr(e1), eta2 = prog.expr(e2);
  const FilterExpr fe = filter_expr(prog.expr(av), Nbar, s.dae);
  add_h2_block(prog, fe.A, fe.Bw, fe.C, AffineReal(mult.P1), prog.expr(q1),
               eta1, spec.margin);
  const FrequencyWeight w = sensitivity_weight(nr, nf, eta2);
  for (std::size_t m = 0; m < spec.bands.size(); ++m) {
    const std::string tag = "band" + std::to_string(m);
    const Variable P = prog.add_hermitian("P_" + tag, n);
    const Variable Q = prog.add_hermitian("Q_" + tag, n);
    add_gkyp_block(prog, fe.A, fe.Bf, fe.C, w, spec.bands.center(m),
                   spec.bands.half_width(m), prog.cexpr(P), prog.cexpr(Q),
                   AffineReal(mult.V[m]), spec.margin, tag);
  }
  // Entrywise box on the numerator keeps the scale-invariant objective bounded.
  const AffineReal ones(MatrixXd(MatrixXd::Constant(Nbar.rows(), Nbar.cols(),
                                                    spec.box)));
  prog.add_nonneg(ones - Nbar, "box:upper");
  prog.add_nonneg(ones + Nbar, "box:lower");
  prog.minimize(spec.alpha * eta1 - (1.0 - spec.alpha) * eta2);

  StepResult out;
  out.res = prog.solve(spec.solver);
  if (out.res.x.size() == 0) return out;
  const VectorXd& x = out.res.x;
  out.eta1 = prog.value(eta1, x);
  out.eta2 = prog.value(eta2, x);
  out.filter = FilterForm::from_stacked(prog.value(zv, x) * s.basis,
                                        prog.value(av, x).col(0));
  return out;
}

}  // namespace

DetectReport certify_detector(const DetectSpec& spec, const FilterForm& filter) {
  const Setup s = prepare(spec);
  require(filter.d_a() == filter.d_N() && filter.width() == s.dae.n_eq(),
          "certify_detector: filter shape does not match the plant");
  DetectReport rep;
  rep.filter = filter;
  if (filter.spectral_radius() >= 1.0) {
    rep.status = SolveStatus::Infeasible;
    rep.message = "filter denominator is not Schur stable";
    return rep;
  }
  const StepResult r = multiplier_step(s, spec, filter);
  rep.status = r.res.status;
  rep.message = r.res.message;
  rep.iterations = r.res.iterations;
  rep.eta1 = r.eta1;
  rep.eta2 = r.eta2;
  if (rep.ok()) rep.trace = {objective(spec, r.eta1, r.eta2)};
  return rep;
}

DetectReport synthesize_detector(const DetectSpec& spec) {
  const Setup s = prepare(spec);
  DetectReport rep;
  if (s.basis.rows() < spec.n_r) {
    rep.status = SolveStatus::Infeasible;
    rep.message = "no decoupling freedom: left null space has dimension " +
                  std::to_string(s.basis.rows()) + " < n_r = " +
                  std::to_string(spec.n_r);
    return rep;
  }
  const FeasibilityReport fr = feasibility_check(spec.plant, spec.bands);
  if (!fr.pass) rep.warnings.push_back("feasibility check: " + fr.message);

  const VectorXd a0 = spec.initial_denominator();
  require(spectral_radius(companion(a0)) < 1.0,
          "detection: initial denominator is not Schur stable");
  const FilterForm init = FilterForm::from_stacked(
      spec.box * init_numerator(s.Hbar, spec.n_r), a0);

  StepResult cur = multiplier_step(s, spec, init);
  if (!cur.res.ok()) {
    rep.status = cur.res.status == SolveStatus::Infeasible
                     ? SolveStatus::Infeasible
                     : cur.res.status;
    rep.message = "initial multiplier step failed: " + cur.res.message;
    return rep;
  }
  StepResult best = cur;
  double best_obj = objective(spec, cur.eta1, cur.eta2);
  rep.trace.push_back(best_obj);

  const Index blk = spec.d_N + 1;
  int it = 1;
  for (; it <= spec.max_iter; ++it) {
    const StepResult fs = filter_step(s, spec, cur.mult, spec.n_r, blk);
    // Any primal-feasible filter will do: the multiplier step re-certifies it.
    const bool usable = fs.res.ok() || (fs.res.x.size() > 0 &&
                                        fs.res.primal_infeasibility < spec.solver.tol);
    if (!usable || fs.filter.spectral_radius() >= 1.0) {
      rep.warnings.push_back("filter step " + std::to_string(it) +
                             " stopped: " + fs.res.message);
      break;
    }
    StepResult ms = multiplier_step(s, spec, fs.filter);
    if (!ms.res.ok()) {
      rep.warnings.push_back("multiplier step " + std::to_string(it) +
                             " stopped: " + ms.res.message);
      break;
    }
    const double obj = objective(spec, ms.eta1, ms.eta2);
    if (obj > best_obj) {
      // Exact steps cannot increase the objective; solver inaccuracy can.
      // The improvement is below tolerance either way, so keep the incumbent.
      rep.warnings.push_back("iteration " + std::to_string(it) +
                             " re-certified objective rose by " +
                             std::to_string(obj - best_obj));
      rep.converged = true;
      break;
    }
    rep.trace.push_back(obj);
    const double prev = best_obj;
    best = ms;
    best_obj = obj;
    cur = std::move(ms);
    if (prev - obj < spec.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.iterations = std::min(it, spec.max_iter);
  rep.status = SolveStatus::Optimal;
  if (rep.converged)
    rep.message = "converged: objective improvement below tolerance";
  else if (it > spec.max_iter)
    rep.message = "iteration limit reached before the improvement fell below tolerance";
  else
    rep.message = "stopped early: a subproblem failed; best certified iterate kept";
  rep.filter = best.filter;
  rep.eta1 = best.eta1;
  rep.eta2 = best.eta2;
  return rep;
}

DetectValidation validate_detector(const DetectReport& report,
                                   const StateSpace& plant,
                                   const FrequencyBands& bands,
                                   unsigned long long seed) {
  DetectValidation v;
  const FilterForm& f = report.filter;
  const DaeForm dae = to_dae(plant);
  const CanonicalRealization r = realize_filter(f, dae);

  v.h2_sq = plant.nw() > 0 ? h2_norm_sq(r.noise_channel()) : 0.0;
  v.h2_ok = v.h2_sq <= report.eta1 + 1e-6;

  GridOptions go;
  go.per_band = 512;
  const double hm = hminus_index(r.fault_channel(), bands, go);
  v.hminus_sq = hm * hm;
  v.hminus_ok = v.hminus_sq >= report.eta2 - 1e-6;

  const MatrixXd NH = f.stacked() * stack_nullspace(dae, f.d_N());
  v.decoupling = NH.size() ? NH.cwiseAbs().maxCoeff() : 0.0;
  v.decoupling_ok = v.decoupling < 1e-8;

  // Inputs and disturbances only: the residual must stay at rounding level.
  const int T = 200;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto random = [&](Index rows) {
    MatrixXd m(rows, T);
    for (Index i = 0; i < m.size(); ++i) m(i) = uni(gen);
    return m;
  };
  const MatrixXd u = random(plant.nu()), d = random(plant.nd());
  const MatrixXd y =
      simulate_plant(plant, VectorXd::Zero(plant.nx()), u, d,
                     MatrixXd::Zero(plant.nw(), T),
                     MatrixXd::Zero(plant.nf(), T));
  const MatrixXd res = apply_filter(f, dae, y, u);
  const double scale = 1.0 + y.cwiseAbs().maxCoeff() * f.stacked().cwiseAbs().sum();
  v.simulation = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
  v.simulation_ok = v.simulation <= 1e-10 * scale;
  return v;
}

}  // namespace ffde
