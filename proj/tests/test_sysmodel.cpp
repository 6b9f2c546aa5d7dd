#include <gtest/gtest.h>

#include <cmath>

#include "ffde/bench.hpp"
#include "ffde/freqan.hpp"
#include "ffde/sysmodel.hpp"
#include "oracles.hpp"

using namespace ffde;

namespace {

// Random plant with every channel present, for property tests.
StateSpace random_plant(oracle::Gen& g, Index nx, Index nu, Index nd, Index nw,
                        Index nf, Index ny) {
  StateSpace s = StateSpace::zeros(nx, nu, nd, nw, nf, ny);
  s.A = g.stable(nx, 0.9);
  s.B = g.matrix(nx, nu);
  s.Bd = g.matrix(nx, nd);
  s.Bw = g.matrix(nx, nw);
  s.Bf = g.matrix(nx, nf);
  s.C = g.matrix(ny, nx);
  s.D = g.matrix(ny, nu);
  s.Dw = g.matrix(ny, nw);
  s.Df = g.matrix(ny, nf);
  return s;
}

FilterForm random_filter(oracle::Gen& g, Index n_r, int d, Index width) {
  FilterForm f;
  f.a = g.stable_denominator(d + 1, 0.8);
  for (int i = 0; i <= d; ++i) f.N.push_back(g.matrix(n_r, width));
  return f;
}

}  // namespace

TEST(Dae, ScalarBlockSubstitution) {
  StateSpace s = StateSpace::zeros(1, 0, 1, 0, 0, 1);
  s.A(0, 0) = 0.5;
  s.Bd(0, 0) = 1.0;
  s.C(0, 0) = 1.0;
  const DaeForm d = to_dae(s);
  MatrixXd H0(2, 2), H1(2, 2);
  H0 << 0.5, 1, 1, 0;
  H1 << -1, 0, 0, 0;
  EXPECT_EQ(d.H0, H0);
  EXPECT_EQ(d.H1, H1);
}

TEST(Dae, PowerSystemSizes) {
  const DaeForm d = to_dae(power_system_model());
  EXPECT_EQ(d.H0.rows(), 32);
  EXPECT_EQ(d.H0.cols(), 19);
}

TEST(Dae, EmptyDisturbanceChannel) {
  const DaeForm d = to_dae(turbine_model());
  EXPECT_EQ(d.H0.cols(), 3);
  EXPECT_EQ(d.W.cols(), 0);
}

TEST(Dae, BlockPatternOnRandomPlants) {
  oracle::Gen g(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index nx = g.integer(1, 5), ny = g.integer(1, 4);
    const StateSpace s = random_plant(g, nx, g.integer(0, 2), g.integer(0, 2),
                                      g.integer(0, 2), g.integer(0, 2), ny);
    const DaeForm d = to_dae(s);
    const Index nd = s.nd();
    EXPECT_EQ(d.H0.topLeftCorner(nx, nx), s.A);
    EXPECT_EQ(d.H0.topRightCorner(nx, nd), s.Bd);
    EXPECT_EQ(d.H0.bottomLeftCorner(ny, nx), s.C);
    EXPECT_TRUE(d.H0.bottomRightCorner(ny, nd).isZero(0));
    MatrixXd H1 = MatrixXd::Zero(nx + ny, nx + nd);
    H1.topLeftCorner(nx, nx) = -MatrixXd::Identity(nx, nx);
    EXPECT_EQ(d.H1, H1);
    EXPECT_TRUE(d.L.topLeftCorner(nx, ny).isZero(0));
    EXPECT_EQ(d.L.topRightCorner(nx, s.nu()), s.B);
    EXPECT_EQ(d.L.bottomLeftCorner(ny, ny), -MatrixXd::Identity(ny, ny));
    EXPECT_EQ(d.L.bottomRightCorner(ny, s.nu()), s.D);
    MatrixXd W(nx + ny, s.nw()), G(nx + ny, s.nf());
    W << s.Bw, s.Dw;
    G << s.Bf, s.Df;
    EXPECT_EQ(d.W, W);
    EXPECT_EQ(d.G, G);
  }
}

TEST(StackNullspace, DegenerateToeplitz) {
  oracle::Gen g(3);
  const DaeForm d = to_dae(random_plant(g, 2, 1, 1, 1, 1, 2));
  MatrixXd expect(d.H0.rows(), 2 * d.H0.cols());
  expect << d.H0, d.H1;
  EXPECT_EQ(stack_nullspace(d, 0), expect);
}

TEST(StackNullspace, MatchesPolynomialProduct) {
  oracle::Gen g(5);
  for (int trial = 0; trial < 25; ++trial) {
    const Index nx = g.integer(1, 4), ny = g.integer(1, 3);
    const DaeForm d = to_dae(random_plant(g, nx, 1, g.integer(0, 2), 1, 1, ny));
    const int dN = g.integer(0, 3);
    const MatrixXd Hb = stack_nullspace(d, dN);
    ASSERT_EQ(Hb.rows(), (dN + 1) * (nx + ny));
    ASSERT_EQ(Hb.cols(), (dN + 2) * d.H0.cols());
    const FilterForm f = random_filter(g, 2, dN, nx + ny);
    const MatrixXd NH = f.stacked() * Hb;
    const auto coeffs = oracle::poly_product(f.N, d.H0, d.H1);
    const Index w = d.H0.cols();
    for (int k = 0; k <= dN + 1; ++k)
      EXPECT_LT((NH.middleCols(k * w, w) - coeffs[k]).cwiseAbs().maxCoeff(),
                1e-12);
  }
}

TEST(StackNullspace, LeftNullVectorsAnnihilatePolynomial) {
  oracle::Gen g(6);
  for (int trial = 0; trial < 20; ++trial) {
    const DaeForm d = to_dae(random_plant(g, 3, 1, 1, 1, 1, 3));
    const int dN = g.integer(1, 3);
    const MatrixXd Hb = stack_nullspace(d, dN);
    const MatrixXd basis = left_null_basis(Hb);
    if (basis.rows() == 0) continue;
    const MatrixXd Nbar = g.matrix(2, basis.rows()) * basis;
    const FilterForm f =
        FilterForm::from_stacked(Nbar, repeated_root(0.1, dN + 1));
    for (const MatrixXd& c : oracle::poly_product(f.N, d.H0, d.H1))
      EXPECT_LT(c.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(RealizeFilter, UnrolledSecondOrder) {
  StateSpace s = StateSpace::zeros(1, 0, 0, 0, 1, 1);
  s.A(0, 0) = 0.3;
  s.C(0, 0) = 1.0;
  s.Bf(0, 0) = 2.0;
  s.Df(0, 0) = 0.5;
  const DaeForm d = to_dae(s);
  FilterForm f;
  f.a = VectorXd(2);
  f.a << 0.06, -0.5;
  MatrixXd N0(1, 2), N1(1, 2);
  N0 << 1.0, -2.0;
  N1 << 0.5, 3.0;
  f.N = {N0, N1};
  const CanonicalRealization r = realize_filter(f, d);
  MatrixXd A(2, 2);
  A << 0, -0.06, 1, 0.5;
  EXPECT_EQ(r.A, A);
  MatrixXd C(1, 2);
  C << 0, 1;
  EXPECT_EQ(r.C, C);
  MatrixXd Bf(2, 1);
  Bf << -(N0 * d.G)(0, 0), -(N1 * d.G)(0, 0);
  EXPECT_EQ(r.Bf, Bf);
}

TEST(RealizeFilter, RejectsUnequalDegrees) {
  oracle::Gen g(7);
  const DaeForm d = to_dae(random_plant(g, 2, 1, 1, 1, 1, 2));
  FilterForm f = random_filter(g, 1, 1, 4);
  f.a = g.stable_denominator(3, 0.5);
  EXPECT_THROW(realize_filter(f, d), Error);
}

TEST(RealizeFilter, AgreesWithRationalFormOnUnitCircle) {
  oracle::Gen g(8);
  for (int trial = 0; trial < 10; ++trial) {
    const DaeForm d = to_dae(random_plant(g, 3, 1, 1, 2, 2, 2));
    const int dN = g.integer(0, 3);
    const FilterForm f = random_filter(g, g.integer(1, 3), dN, 5);
    const CanonicalRealization r = realize_filter(f, d);
    EXPECT_EQ(r.A.rows(), f.n_r() * (dN + 1));
    for (int k = 0; k < 64; ++k) {
      const double th = g.uniform(-std::numbers::pi, std::numbers::pi);
      const oracle::cplx z = std::polar(1.0, th);
      const MatrixXcd fault =
          oracle::resolvent(r.A, r.Bf, r.C, MatrixXd(), z);
      const MatrixXcd noise =
          oracle::resolvent(r.A, r.Bw, r.C, MatrixXd(), z);
      EXPECT_LT((fault + oracle::rational(f.N, d.G, f.a, z)).cwiseAbs().maxCoeff(),
                1e-9);
      EXPECT_LT((noise + oracle::rational(f.N, d.W, f.a, z)).cwiseAbs().maxCoeff(),
                1e-9);
    }
  }
}

TEST(RealizeFilter, PowerSystemFilterOrder) {
  const DaeForm d = to_dae(power_system_model());
  const MatrixXd basis = left_null_basis(stack_nullspace(d, 2));
  const FilterForm f =
      FilterForm::from_stacked(basis.topRows(3), repeated_root(0.1, 3));
  EXPECT_EQ(realize_filter(f, d).A.rows(), 9);
}

TEST(ApplyFilter, ZeroInputGivesZeroResidual) {
  oracle::Gen g(9);
  const StateSpace s = random_plant(g, 2, 1, 1, 1, 1, 2);
  const FilterForm f = random_filter(g, 1, 2, 4);
  const MatrixXd r =
      apply_filter(f, to_dae(s), MatrixXd::Zero(2, 30), MatrixXd::Zero(1, 30));
  EXPECT_TRUE(r.isZero(0));
}

TEST(ApplyFilter, MatchesDifferenceEquation) {
  oracle::Gen g(10);
  for (int trial = 0; trial < 10; ++trial) {
    const StateSpace s = random_plant(g, 2, 1, 1, 1, 1, 2);
    const DaeForm d = to_dae(s);
    const FilterForm f = random_filter(g, 2, g.integer(0, 3), 4);
    const MatrixXd y = g.matrix(2, 40), u = g.matrix(1, 40);
    MatrixXd yu(3, 40);
    yu << y, u;
    const MatrixXd expect = oracle::difference_equation(f.N, f.a, d.L * yu);
    EXPECT_LT((apply_filter(f, d, y, u) - expect).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ApplyFilter, ImpulseResponseColumn) {
  oracle::Gen g(12);
  const StateSpace s = random_plant(g, 2, 0, 1, 0, 1, 2);
  const DaeForm d = to_dae(s);
  const FilterForm f = random_filter(g, 1, 2, 4);
  MatrixXd y = MatrixXd::Zero(2, 25);
  y(1, 0) = 1.0;
  const MatrixXd r = apply_filter(f, d, y, MatrixXd::Zero(0, 25));
  // Impulse response of N(q) L e_1 / a(q): difference equation on a unit pulse.
  MatrixXd pulse = MatrixXd::Zero(1, 25);
  pulse(0, 0) = 1.0;
  std::vector<MatrixXd> NL;
  for (const auto& Ni : f.N) NL.push_back(Ni * d.L.col(1));
  EXPECT_LT((r - oracle::difference_equation(NL, f.a, pulse)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(ApplyFilter, RejectsUnstableDenominator) {
  oracle::Gen g(13);
  const StateSpace s = random_plant(g, 2, 1, 1, 1, 1, 2);
  FilterForm f = random_filter(g, 1, 1, 4);
  f.a << 0.0, -1.5;  // root at 1.5
  EXPECT_THROW(apply_filter(f, to_dae(s), MatrixXd::Zero(2, 5),
                            MatrixXd::Zero(1, 5)),
               Error);
}

TEST(ApplyFilter, DecoupledResidualDecaysFromAnyInitialState) {
  oracle::Gen g(14);
  for (int trial = 0; trial < 5; ++trial) {
    const StateSpace s = random_plant(g, 3, 1, 1, 1, 1, 3);
    const DaeForm d = to_dae(s);
    const MatrixXd basis = left_null_basis(stack_nullspace(d, 2));
    ASSERT_GE(basis.rows(), 1);
    const FilterForm f =
        FilterForm::from_stacked(basis.topRows(1), repeated_root(0.5, 3));
    const int T = 160;
    const VectorXd x0 = g.matrix(3, 1, 5.0);
    const MatrixXd u = g.matrix(1, T), dist = g.matrix(1, T);
    const MatrixXd y = simulate_plant(s, x0, u, dist, MatrixXd::Zero(1, T),
                                      MatrixXd::Zero(1, T));
    const MatrixXd r = apply_filter(f, d, y, u);
    const double peak = r.cwiseAbs().maxCoeff();
    // Triple pole at 0.5: 0.5^k k^2 falls below 1e-6 well within 60 samples.
    EXPECT_LT(r.rightCols(T - 60).cwiseAbs().maxCoeff(), 1e-6 * std::max(peak, 1.0));
  }
}

TEST(Zoh, ScalarExponential) {
  StateSpace c = StateSpace::zeros(1, 1, 0, 0, 0, 1);
  c.A(0, 0) = -1.0;
  c.B(0, 0) = 1.0;
  c.C(0, 0) = 1.0;
  const StateSpace d = discretize_zoh(c, 0.1);
  EXPECT_NEAR(d.A(0, 0), std::exp(-0.1), 1e-15);
  EXPECT_NEAR(d.B(0, 0), 1.0 - std::exp(-0.1), 1e-15);
}

TEST(Zoh, DoubleIntegrator) {
  StateSpace c = StateSpace::zeros(2, 1, 0, 0, 0, 1);
  c.A(0, 1) = 1.0;
  c.B(1, 0) = 1.0;
  c.C(0, 0) = 1.0;
  const StateSpace d = discretize_zoh(c, 1.0);
  MatrixXd A(2, 2), B(2, 1);
  A << 1, 1, 0, 1;
  B << 0.5, 1;
  EXPECT_LT((d.A - A).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((d.B - B).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Zoh, EigenvalueMapping) {
  oracle::Gen g(15);
  for (int trial = 0; trial < 10; ++trial) {
    // Diagonalizable by construction: A = V diag(l) V^-1 with real l.
    const Index n = g.integer(2, 5);
    VectorXd lam(n);
    for (Index i = 0; i < n; ++i) lam(i) = g.uniform(-3.0, 1.0);
    MatrixXd V = g.matrix(n, n) + 3.0 * MatrixXd::Identity(n, n);
    StateSpace c = StateSpace::zeros(n, 1, 0, 0, 0, 1);
    c.A = V * lam.asDiagonal() * V.inverse();
    const StateSpace d = discretize_zoh(c, 0.1);
    std::vector<double> got, want;
    for (auto e : d.A.eigenvalues()) got.push_back(e.real());
    for (Index i = 0; i < n; ++i) want.push_back(std::exp(0.1 * lam(i)));
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (Index i = 0; i < n; ++i) EXPECT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(Zoh, RejectsNonPositivePeriod) {
  EXPECT_THROW(discretize_zoh(turbine_continuous(), 0.0), Error);
}

TEST(Bench, TurbineContinuousZero) {
  const StateSpace c = turbine_continuous();
  const double zero = 1.4 / 0.183;
  EXPECT_NEAR(zero, 7.6503, 1e-4);
  const MatrixXcd at_zero =
      oracle::resolvent(c.A, c.B, c.C, c.D, oracle::cplx(zero, 0.0));
  EXPECT_LT(std::abs(at_zero(0, 0)), 1e-12);
}

TEST(Bench, TurbineDiscretePolesAndDcGain) {
  const StateSpace c = turbine_continuous();
  const StateSpace d = turbine_model();
  std::vector<double> got, want;
  for (auto e : d.A.eigenvalues()) got.push_back(e.real());
  for (auto e : c.A.eigenvalues()) want.push_back(std::exp(0.1 * e.real()));
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-10);
  const MatrixXcd dc = oracle::resolvent(d.A, d.B, d.C, d.D, 1.0);
  EXPECT_NEAR(dc(0, 0).real(), 1.4 / 0.45, 1e-9);
  EXPECT_EQ(d.Bf, d.B);
}

TEST(Bench, PowerSystemStructure) {
  const PowerSystemParams p;
  const StateSpace c = power_system_continuous(p);
  EXPECT_EQ(c.nx(), 16);
  const auto off = power_system_offsets(p);
  EXPECT_EQ(off, (std::vector<Index>{0, 5, 11}));
  // Tie-line flows are antisymmetric, so the tie powers sum to a constant.
  VectorXd tie_sum = VectorXd::Zero(16);
  for (Index o : off) tie_sum += c.A.row(o).transpose();
  EXPECT_LT(tie_sum.cwiseAbs().maxCoeff(), 1e-9);
  // Participation factors sum to one per area.
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(p.participation[i] * p.generators[i], 1.0, 1e-15);
  // Fault channels and the noise input as listed.
  EXPECT_NEAR(c.Bf(0, 0), 2.0 * std::numbers::pi * p.tie_capacity, 1e-9);
  EXPECT_EQ(c.Bf(off[1] + 2 + 3, 1), -p.ki[1]);
  EXPECT_EQ(c.Df(off[0] + 1, 2), 1.0);
  EXPECT_TRUE(c.Bw.isZero(0));
  EXPECT_TRUE(c.Dw.isOnes(0));
}

TEST(Bench, PowerSystemMatchesParameters) {
  const PowerSystemParams p;
  const StateSpace c = power_system_continuous(p);
  for (std::size_t i = 0; i < 3; ++i) {
    const Index w = power_system_offsets(p)[i] + 1;
    const double k = p.w0 / (2.0 * p.h[i] * p.base[i]);
    EXPECT_NEAR(c.A(w, w), -k / p.load_damping[i], 1e-12);
    for (int gi = 0; gi < p.generators[i]; ++gi)
      EXPECT_NEAR(c.A(w + 1 + gi, w), -1.0 / (p.tch * p.droop[i]), 1e-9);
  }
}

TEST(Bench, ScenarioSignals) {
  const Scenario proc = find_scenario("power_detection_process");
  for (int k = 0; k < 50; ++k) EXPECT_EQ(proc.faults[1](k), 0.0);
  const Scenario sens = find_scenario("power_detection_sensor");
  EXPECT_NEAR(sens.faults[2](80), 0.15, 1e-15);
  EXPECT_NEAR(sens.faults[2](100), 0.15 + 0.02 * std::sin(15.0), 1e-15);
  EXPECT_THROW(find_scenario("nope"), Error);
}

TEST(Bench, EstimationFaultSpectrum) {
  const Scenario est = find_scenario("power_estimation");
  const MatrixXd F = est.fault_matrix(4096);
  VectorXd tie = F.row(0).transpose();
  const auto peaks = dft_peaks(tie, 2);
  ASSERT_EQ(peaks.size(), 2u);
  std::vector<double> sorted = peaks;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_NEAR(sorted[0], 0.65, 0.01);
  EXPECT_NEAR(sorted[1], 0.8, 0.01);
  EXPECT_GE(in_band_energy_ratio(tie, est.bands), 0.99);
}

TEST(Bench, TurbineFaultInBand) {
  const Scenario t = find_scenario("turbine_estimation");
  const VectorXd f = t.fault_matrix(4096).row(0).transpose();
  EXPECT_GE(in_band_energy_ratio(f, t.bands), 0.99);
}
