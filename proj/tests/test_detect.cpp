#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "ffde/bench.hpp"
#include "ffde/detect.hpp"
#include "ffde/freqan.hpp"
#include "oracles.hpp"

using namespace ffde;

namespace {

DetectSpec power_spec() {
  DetectSpec s;
  s.plant = power_system_model();
  s.bands = FrequencyBands({{0.0, 0.3}});
  s.n_r = 3;
  s.d_N = 2;
  s.alpha = 0.5;
  return s;
}

DetectSpec turbine_spec() {
  DetectSpec s;
  s.plant = turbine_model();
  s.bands = FrequencyBands({{0.0, 0.2}});
  s.n_r = 1;
  s.d_N = 4;
  s.alpha = 0.5;
  return s;
}

// A full run takes minutes; three alternations exercise every step.
class PowerDetector : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    spec_ = std::make_unique<DetectSpec>(power_spec());
    spec_->max_iter = 3;
    report_ = std::make_unique<DetectReport>(synthesize_detector(*spec_));
  }
  static void TearDownTestSuite() {
    report_.reset();
    spec_.reset();
  }
  static std::unique_ptr<DetectSpec> spec_;
  static std::unique_ptr<DetectReport> report_;
};

std::unique_ptr<DetectSpec> PowerDetector::spec_;
std::unique_ptr<DetectReport> PowerDetector::report_;

}  // namespace

TEST(InitNumerator, SpansLeftNullSpace) {
  oracle::Gen g(61);
  for (int trial = 0; trial < 20; ++trial) {
    const Index rows = g.integer(4, 10), rank = g.integer(1, rows - 1);
    const MatrixXd H = g.matrix(rows, rank) * g.matrix(rank, g.integer(rank, 12));
    const int n_r = g.integer(1, static_cast<int>(rows - rank));
    const MatrixXd N = init_numerator(H, n_r);
    ASSERT_EQ(N.rows(), n_r);
    EXPECT_LT((N * H).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(N.cwiseAbs().maxCoeff(), 1.0, 1e-15);
    EXPECT_EQ(Eigen::FullPivLU<MatrixXd>(N).rank(), n_r);
  }
}

TEST(InitNumerator, ReportsMissingFreedom) {
  const MatrixXd H = MatrixXd::Identity(3, 3);
  try {
    init_numerator(H, 1);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no decoupling freedom"), std::string::npos);
  }
  EXPECT_THROW(init_numerator(MatrixXd::Zero(3, 1), 0), Error);
}

TEST(DetectSpecTest, InitialDenominatorDefaultsToRepeatedRoot) {
  DetectSpec s;
  s.d_N = 2;
  const VectorXd a = s.initial_denominator();
  ASSERT_EQ(a.size(), 3);
  EXPECT_LT((a - repeated_root(0.1, 3)).norm(), 1e-15);
  s.roots = {0.2, -0.3, 0.4};
  FilterForm f;
  f.a = s.initial_denominator();
  EXPECT_NEAR(f.spectral_radius(), 0.4, 1e-12);
}

TEST_F(PowerDetector, ImprovesMonotonicallyWithPositiveSensitivity) {
  ASSERT_TRUE(report_->ok()) << report_->message;
  EXPECT_GT(report_->eta2, 0.0);
  EXPECT_GT(report_->eta1, 0.0);
  EXPECT_EQ(report_->iterations, 3);
  ASSERT_EQ(report_->trace.size(), 4u);
  for (std::size_t i = 1; i < report_->trace.size(); ++i)
    EXPECT_LT(report_->trace[i], report_->trace[i - 1]);
  EXPECT_NEAR(report_->trace.back(), report_->objective(spec_->alpha), 1e-9);
  EXPECT_FALSE(report_->converged);
  EXPECT_NE(report_->message.find("iteration limit"), std::string::npos);
  EXPECT_EQ(report_->filter.n_r(), 3);
  EXPECT_LT(report_->filter.spectral_radius(), 1.0);
  const CanonicalRealization r = realize_filter(report_->filter, to_dae(spec_->plant));
  EXPECT_EQ(r.A.rows(), 9);
}

TEST(Detect, StopsOnceImprovementFallsBelowTolerance) {
  DetectSpec s = power_spec();
  s.tol = 1.0;
  const DetectReport r = synthesize_detector(s);
  ASSERT_TRUE(r.ok()) << r.message;
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_LT(r.trace[1], r.trace[0]);
}

TEST(Detect, TurbineTraceIsMonotoneOverTenIterations) {
  DetectSpec s = turbine_spec();
  s.max_iter = 10;
  s.tol = 0.0;
  const DetectReport r = synthesize_detector(s);
  ASSERT_TRUE(r.ok()) << r.message;
  EXPECT_EQ(r.iterations, 10);
  ASSERT_EQ(r.trace.size(), 11u);
  for (std::size_t i = 1; i < r.trace.size(); ++i)
    EXPECT_LE(r.trace[i], r.trace[i - 1] + 1e-7);
  EXPECT_TRUE(validate_detector(r, s.plant, s.bands).pass());
}

TEST(Detect, NoiseOnlyWeightBeatsFixedFilters) {
  DetectSpec s = power_spec();
  s.alpha = 1.0;
  s.max_iter = 2;
  const DetectReport r = synthesize_detector(s);
  ASSERT_TRUE(r.ok()) << r.message;
  const MatrixXd N0 =
      s.box * init_numerator(stack_nullspace(to_dae(s.plant), s.d_N), s.n_r);
  for (double root : {0.1, 0.5}) {
    const DetectReport fixed =
        certify_detector(s, FilterForm::from_stacked(N0, repeated_root(root, s.d_N + 1)));
    ASSERT_TRUE(fixed.ok()) << fixed.message;
    EXPECT_LE(r.eta1, fixed.eta1 * (1 + 1e-7)) << "root " << root;
  }
}

TEST_F(PowerDetector, ValidationPasses) {
  ASSERT_TRUE(report_->ok());
  const DetectValidation v = validate_detector(*report_, spec_->plant, spec_->bands);
  EXPECT_TRUE(v.pass());
  EXPECT_LT(v.decoupling, 1e-8);
  EXPECT_LE(v.h2_sq, report_->eta1);
  EXPECT_GE(v.hminus_sq, report_->eta2 - 1e-6);
  EXPECT_LT(v.simulation, 1e-8);
}

TEST_F(PowerDetector, GriddedSensitivityMeetsBound) {
  ASSERT_TRUE(report_->ok());
  const CanonicalRealization r = realize_filter(report_->filter, to_dae(spec_->plant));
  GridOptions go;
  go.per_band = 512;
  const double hm = hminus_index(r.fault_channel(), spec_->bands, go);
  EXPECT_GE(hm * hm, report_->eta2 - 1e-6);
  EXPECT_LE(h2_norm_sq(r.noise_channel()), report_->eta1 * (1 + 1e-9));
}

TEST_F(PowerDetector, PerturbedNumeratorFailsDecoupling) {
  ASSERT_TRUE(report_->ok());
  DetectReport bad = *report_;
  // Columns past the state block act on measured outputs.
  bad.filter.N[0](0, spec_->plant.nx()) += 0.1;
  const DetectValidation v = validate_detector(bad, spec_->plant, spec_->bands);
  EXPECT_FALSE(v.decoupling_ok);
  EXPECT_FALSE(v.simulation_ok);
  EXPECT_FALSE(v.pass());
}

TEST_F(PowerDetector, InflatedSensitivityClaimFails) {
  ASSERT_TRUE(report_->ok());
  DetectReport bad = *report_;
  bad.eta2 *= 2.0;
  const DetectValidation v = validate_detector(bad, spec_->plant, spec_->bands);
  EXPECT_FALSE(v.hminus_ok);
  EXPECT_TRUE(v.decoupling_ok);
}

TEST_F(PowerDetector, UnderstatedNoiseClaimFails) {
  ASSERT_TRUE(report_->ok());
  DetectReport bad = *report_;
  bad.eta1 *= 0.5;
  EXPECT_FALSE(validate_detector(bad, spec_->plant, spec_->bands).h2_ok);
}

// Scaling the numerator by c scales both certified bounds by c^2, up to
// terms proportional to the strictness margin, so a small margin is used.
TEST_F(PowerDetector, CertificateScalesQuadratically) {
  ASSERT_TRUE(report_->ok());
  DetectSpec s = *spec_;
  s.margin = 1e-8;
  const DetectReport base = certify_detector(s, report_->filter);
  ASSERT_TRUE(base.ok()) << base.message;
  for (double c : {0.5, 2.0}) {
    FilterForm f = report_->filter;
    for (auto& Ni : f.N) Ni *= c;
    const DetectReport scaled = certify_detector(s, f);
    ASSERT_TRUE(scaled.ok()) << scaled.message;
    EXPECT_NEAR(scaled.eta1 / base.eta1 / (c * c), 1.0, 1e-4) << "c = " << c;
    EXPECT_NEAR(scaled.eta2 / base.eta2 / (c * c), 1.0, 1e-4) << "c = " << c;
  }
}

// The sensitivity constraint carries the margin additively, so eta2 + margin
// scales exactly.
TEST_F(PowerDetector, SensitivityPlusMarginScalesExactly) {
  ASSERT_TRUE(report_->ok());
  const double m = spec_->margin;
  const DetectReport base = certify_detector(*spec_, report_->filter);
  ASSERT_TRUE(base.ok()) << base.message;
  FilterForm f = report_->filter;
  for (auto& Ni : f.N) Ni *= 2.0;
  const DetectReport scaled = certify_detector(*spec_, f);
  ASSERT_TRUE(scaled.ok()) << scaled.message;
  EXPECT_NEAR((scaled.eta2 + m) / (base.eta2 + m), 4.0, 4e-5);
}

TEST(Detect, RejectsInvalidWeights) {
  DetectSpec s = power_spec();
  s.alpha = 1.5;
  EXPECT_THROW(synthesize_detector(s), Error);
  s = power_spec();
  s.n_r = 100;
  const DetectReport r = synthesize_detector(s);
  EXPECT_EQ(r.status, SolveStatus::Infeasible);
  EXPECT_NE(r.message.find("no decoupling freedom"), std::string::npos);
}
