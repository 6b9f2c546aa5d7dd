#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "ffde/detect.hpp"
#include "ffde/freqan.hpp"
#include "ffde/lyapunov.hpp"
#include "ffde/runtime.hpp"
#include "oracles.hpp"

using namespace ffde;

namespace {

ThresholdSpec base_spec() {
  ThresholdSpec s;
  s.lambda = 0.1;
  s.far = 1e-3;
  s.window = 10;
  s.n_r = 3;
  s.eta1 = 1.27888;
  s.eta2 = 0.00140794;
  return s;
}

// Random plant with one disturbance, noise and fault channel, and a
// decoupling filter of order two taken straight from the null space.
struct Fixture {
  StateSpace plant;
  FilterForm filter;
  FrequencyBands band{{{0.0, 0.2}}};
  double eta1 = 0.0, eta2 = 0.0;
};

Fixture make_fixture() {
  oracle::Gen g(71);
  Fixture fx;
  StateSpace p = StateSpace::zeros(3, 1, 1, 1, 1, 3);
  p.A = g.stable(3, 0.7);
  p.B = g.matrix(3, 1);
  p.Bd = g.matrix(3, 1);
  p.Bw = g.matrix(3, 1);
  p.Bf = g.matrix(3, 1);
  p.C = g.matrix(3, 3);
  p.Dw = g.matrix(3, 1);
  p.Df = g.matrix(3, 1);
  fx.plant = p;
  const DaeForm d = to_dae(p);
  fx.filter = FilterForm::from_stacked(init_numerator(stack_nullspace(d, 2), 1),
                                       repeated_root(0.1, 3));
  const CanonicalRealization r = realize_filter(fx.filter, d);
  fx.eta1 = h2_norm_sq(r.noise_channel());
  const double hm = hminus_index(r.fault_channel(), fx.band);
  fx.eta2 = 0.9 * hm * hm;
  return fx;
}

}  // namespace

TEST(Threshold, ClosedFormValue) {
  const ThresholdSpec s = base_spec();
  EXPECT_NEAR(threshold(s), 0.1 * std::sqrt(2 * 3 * 1.27888 * std::log(2 * 10 * 3 / 1e-3)),
              1e-15);
  EXPECT_NEAR(chebyshev_threshold(s), 0.1 * std::sqrt(10 * 3 * 1.27888 / 1e-3), 1e-12);
  EXPECT_LT(threshold(s), chebyshev_threshold(s));
  EXPECT_NEAR(detectability_floor(s), threshold(s) * std::sqrt(3 / 0.00140794), 1e-12);
}

TEST(Threshold, ZeroNoiseGivesZeroThresholdAndCertainDetection) {
  ThresholdSpec s = base_spec();
  s.lambda = 0.0;
  EXPECT_EQ(threshold(s), 0.0);
  s.fault_floor = 1e-9;
  EXPECT_EQ(fdr_bound(s), 1.0);
}

TEST(Threshold, RejectsInvalidInputs) {
  ThresholdSpec s = base_spec();
  s.far = 0.0;
  EXPECT_THROW(threshold(s), Error);
  s = base_spec();
  s.window = 0;
  EXPECT_THROW(threshold(s), Error);
  s = base_spec();
  s.lambda = -1.0;
  EXPECT_THROW(threshold(s), Error);
  s = base_spec();
  s.eta2 = 0.0;
  EXPECT_THROW(detectability_floor(s), Error);
}

// Property: the sub-Gaussian threshold grows with window, residual
// dimension, noise bound and confidence, and beats Chebyshev when
// T / far >= 10 and n_r <= 5.
TEST(Threshold, MonotoneAndBelowChebyshev) {
  oracle::Gen g(72);
  for (int trial = 0; trial < 500; ++trial) {
    ThresholdSpec s;
    s.lambda = g.uniform(0.01, 2.0);
    s.far = g.uniform(1e-6, 0.1);
    s.window = g.integer(1, 100);
    s.n_r = g.integer(1, 5);
    s.eta1 = g.uniform(1e-4, 10.0);
    const double j = threshold(s);
    EXPECT_LT(j, chebyshev_threshold(s));
    ThresholdSpec t = s;
    t.window += 1;
    EXPECT_GT(threshold(t), j);
    t = s;
    t.n_r += 1;
    EXPECT_GT(threshold(t), j);
    t = s;
    t.eta1 *= 1.1;
    EXPECT_GT(threshold(t), j);
    t = s;
    t.lambda *= 1.1;
    EXPECT_GT(threshold(t), j);
    t = s;
    t.far *= 0.5;
    EXPECT_GT(threshold(t), j);
  }
}

TEST(FaultDetectionRate, RequiresFloorAboveDetectability) {
  ThresholdSpec s = base_spec();
  s.fault_floor = 0.5 * detectability_floor(s);
  try {
    fdr_bound(s);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("fault floor below detectability"),
              std::string::npos);
  }
}

TEST(FaultDetectionRate, DoubleFloorValue) {
  ThresholdSpec s = base_spec();
  const double jth = threshold(s);
  s.fault_floor = 2.0 * detectability_floor(s);
  // At twice the floor the margin above the threshold equals J_th.
  const double want = 1.0 - 2.0 * 10 * 3 * std::exp(-jth * jth / (2 * s.eta1 * 0.01));
  EXPECT_NEAR(fdr_bound(s), want, 1e-12);
  EXPECT_GT(fdr_bound(s), 1.0 - 1e-12);
}

TEST(FaultDetectionRate, MonotoneInFloorAndBounded) {
  ThresholdSpec s = base_spec();
  const double f0 = detectability_floor(s);
  double prev = -1.0;
  for (double m = 1.01; m < 3.0; m += 0.05) {
    s.fault_floor = m * f0;
    const double v = fdr_bound(s);
    EXPECT_GE(v, prev);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

TEST(Noise, ParseAndPrint) {
  for (auto k : {NoiseKind::Gaussian, NoiseKind::Uniform, NoiseKind::Rademacher})
    EXPECT_EQ(parse_noise_kind(to_string(k)), k);
  EXPECT_THROW(parse_noise_kind("cauchy"), Error);
}

TEST(CounterRngTest, PureFunctionOfSeedStreamIndex) {
  const CounterRng a(5, 7), b(5, 7), c(5, 8), d(6, 7);
  for (std::uint64_t i : {0ull, 1ull, 999ull, 123456789ull}) {
    EXPECT_EQ(a.bits(i), b.bits(i));
    EXPECT_NE(a.bits(i), c.bits(i));
    EXPECT_NE(a.bits(i), d.bits(i));
  }
  // Reverse-order evaluation gives the same draws.
  std::vector<double> fwd, rev(100);
  for (int i = 0; i < 100; ++i) fwd.push_back(a.normal(i));
  for (int i = 99; i >= 0; --i) rev[i] = a.normal(i);
  EXPECT_EQ(fwd, rev);
}

TEST(CounterRngTest, UniformStaysInOpenInterval) {
  const CounterRng r(1, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform(i);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
}

TEST(SubGaussianNoise, GaussianVarianceMatches) {
  const MatrixXd w = sub_gaussian_noise(NoiseKind::Gaussian, 0.1, 1000000, 1, 3);
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (w.size() - 1);
  EXPECT_NEAR(var, 0.01, 0.01 * 0.01);
  EXPECT_NEAR(mean, 0.0, 5 * 0.1 / 1000.0);
}

TEST(SubGaussianNoise, UniformAndRademacherSupport) {
  const MatrixXd u = sub_gaussian_noise(NoiseKind::Uniform, 0.3, 20000, 2, 4);
  EXPECT_LE(u.cwiseAbs().maxCoeff(), 0.3);
  const double uvar = u.squaredNorm() / u.size();
  EXPECT_NEAR(uvar, 0.09 / 3, 0.05 * 0.03);
  const MatrixXd r = sub_gaussian_noise(NoiseKind::Rademacher, 0.3, 20000, 2, 4);
  std::set<double> values(r.data(), r.data() + r.size());
  EXPECT_EQ(values, (std::set<double>{-0.3, 0.3}));
  EXPECT_NEAR(r.mean(), 0.0, 5 * 0.3 / std::sqrt(40000.0));
}

TEST(SubGaussianNoise, DeterministicAndStreamSeparated) {
  const MatrixXd a = sub_gaussian_noise(NoiseKind::Gaussian, 1.0, 50, 3, 9, 2);
  const MatrixXd b = sub_gaussian_noise(NoiseKind::Gaussian, 1.0, 50, 3, 9, 2);
  const MatrixXd c = sub_gaussian_noise(NoiseKind::Gaussian, 1.0, 50, 3, 9, 3);
  EXPECT_EQ(a, b);
  EXPECT_GT((a - c).norm(), 1.0);
  ASSERT_EQ(a.rows(), 3);
  ASSERT_EQ(a.cols(), 50);
  // A prefix of a longer draw is the shorter draw.
  const MatrixXd longer = sub_gaussian_noise(NoiseKind::Gaussian, 1.0, 80, 3, 9, 2);
  EXPECT_EQ(MatrixXd(longer.leftCols(50)), a);
}

TEST(WindowStatistics, MatchesDirectSums) {
  oracle::Gen g(73);
  const MatrixXd r = g.matrix(2, 40);
  const int T = 7;
  const VectorXd J = window_statistics(r, T);
  ASSERT_EQ(J.size(), 40);
  for (int k = 0; k < 40; ++k) {
    if (k < T - 1) {
      EXPECT_TRUE(std::isnan(J(k)));
      continue;
    }
    double s = 0.0;
    for (int i = k - T + 1; i <= k; ++i) s += r.col(i).norm();
    EXPECT_NEAR(J(k), s / T, 1e-14);
  }
  EXPECT_THROW(window_statistics(r, 0), Error);
}

TEST(ResidualTraceTest, AlarmsAndCsv) {
  MatrixXd r = MatrixXd::Zero(1, 6);
  r(0, 4) = 3.0;
  const ResidualTrace t = ResidualTrace::evaluate(r, 2, 1.0);
  EXPECT_EQ(t.first_alarm(), 4);
  EXPECT_FALSE(t.alarm[0]);
  EXPECT_TRUE(t.alarm[5]);
  std::ostringstream os;
  t.write_csv(os);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "k,r0,J,alarm");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 7);
  EXPECT_EQ(ResidualTrace::evaluate(MatrixXd::Zero(1, 5), 2, 1.0).first_alarm(), -1);
}

TEST(Wilson, ClosedFormAndSymmetry) {
  const double z = 1.959963984540054;
  const RateEstimate e = wilson_interval(0, 10000);
  EXPECT_EQ(e.rate, 0.0);
  EXPECT_EQ(e.lower, 0.0);
  EXPECT_NEAR(e.upper, z * z / (10000 + z * z), 1e-15);
  const RateEstimate f = wilson_interval(10000, 10000);
  EXPECT_NEAR(f.lower, 1.0 - e.upper, 1e-15);
  EXPECT_NEAR(f.upper, 1.0, 1e-15);
  const RateEstimate m = wilson_interval(37, 200);
  const double p = 37.0 / 200, n = 200, den = 1 + z * z / n;
  const double centre = (p + z * z / (2 * n)) / den;
  const double half = z / den * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  EXPECT_NEAR(m.lower, centre - half, 1e-15);
  EXPECT_NEAR(m.upper, centre + half, 1e-15);
  EXPECT_THROW(wilson_interval(3, 2), Error);
}

TEST(Simulation, DisturbancesAreDecoupled) {
  const Fixture fx = make_fixture();
  oracle::Gen g(74);
  const int T = 200;
  const MatrixXd u = g.matrix(1, T), d = g.matrix(1, T);
  const MatrixXd r = simulate_residual(fx.plant, fx.filter, u, d,
                                       MatrixXd::Zero(1, T), MatrixXd::Zero(1, T));
  EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-10);
  const MatrixXd rf = simulate_residual(fx.plant, fx.filter, u, d,
                                        MatrixXd::Zero(1, T), MatrixXd::Ones(1, T));
  EXPECT_GT(rf.cwiseAbs().maxCoeff(), 1e-3);
}

// Gaussian noise makes the covariance bound exact in steady state.
TEST(Simulation, CovarianceBoundMatchesLongRun) {
  const Fixture fx = make_fixture();
  const double lambda = 0.5;
  const MatrixXd S = residual_covariance_bound(fx.plant, fx.filter, lambda);
  EXPECT_NEAR(S.trace(), lambda * lambda * fx.eta1, 1e-12 * fx.eta1);
  const int T = 200000;
  const MatrixXd w = sub_gaussian_noise(NoiseKind::Gaussian, lambda, T, 1, 11);
  const MatrixXd r = simulate_residual(fx.plant, fx.filter, MatrixXd::Zero(1, T),
                                       MatrixXd::Zero(1, T), w, MatrixXd::Zero(1, T));
  const MatrixXd tail = r.rightCols(T - 100);
  const double emp = tail.squaredNorm() / tail.cols();
  EXPECT_NEAR(emp, S.trace(), 0.03 * S.trace());
}

TEST(MonteCarlo, FalseAlarmsStayBelowTarget) {
  const Fixture fx = make_fixture();
  MonteCarloSpec mc;
  mc.threshold.lambda = 0.1;
  mc.threshold.eta1 = fx.eta1;
  mc.threshold.eta2 = fx.eta2;
  mc.trials = 4000;
  mc.seed = 12;
  const RateReport rep = monte_carlo_rates(fx.plant, fx.filter, mc);
  EXPECT_FALSE(rep.has_fault);
  EXPECT_EQ(rep.far.trials, 4000);
  EXPECT_LE(rep.far.rate, mc.threshold.far);
  EXPECT_GT(rep.burn_in, 0);
  // Same seed, same counts; the thread count does not matter.
  mc.threads = 3;
  EXPECT_EQ(monte_carlo_rates(fx.plant, fx.filter, mc).far.hits, rep.far.hits);
}

TEST(MonteCarlo, DetectionAboveFloorMeetsBound) {
  const Fixture fx = make_fixture();
  MonteCarloSpec mc;
  mc.threshold.lambda = 0.1;
  mc.threshold.eta1 = fx.eta1;
  mc.threshold.eta2 = fx.eta2;
  mc.threshold.fault_floor = 1.5 * detectability_floor(mc.threshold);
  mc.trials = 2000;
  const double f = mc.threshold.fault_floor;
  const RateReport rep = monte_carlo_rates(
      fx.plant, fx.filter, mc, [f](int) { return VectorXd::Constant(1, f); });
  ASSERT_TRUE(rep.has_fault);
  EXPECT_GE(rep.detection.upper, fdr_bound(mc.threshold));
}

TEST(MonteCarlo, NoiseFreeFaultAlwaysDetected) {
  const Fixture fx = make_fixture();
  MonteCarloSpec mc;
  mc.threshold.lambda = 0.0;
  mc.threshold.eta1 = fx.eta1;
  mc.trials = 50;
  const RateReport rep = monte_carlo_rates(
      fx.plant, fx.filter, mc, [](int) { return VectorXd::Constant(1, 1e-3); });
  EXPECT_EQ(rep.detection.hits, 50);
  EXPECT_EQ(rep.far.hits, 0);
}

TEST(MonteCarlo, RejectsCoupledFilter) {
  Fixture fx = make_fixture();
  fx.filter.N[0](0, 0) += 0.1;
  MonteCarloSpec mc;
  mc.threshold.eta1 = fx.eta1;
  mc.trials = 10;
  EXPECT_THROW(monte_carlo_rates(fx.plant, fx.filter, mc), Error);
}
