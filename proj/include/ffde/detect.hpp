#pragma once

#include <string>
#include <vector>

#include "ffde/conic.hpp"
#include "ffde/freqan.hpp"
#include "ffde/sysmodel.hpp"

namespace ffde {

/// Fault-detection design problem.
struct DetectSpec {
  StateSpace plant;
  FrequencyBands bands;
  int d_N = 2;
  int n_r = 1;
  double alpha = 0.5;   // weight of the noise bound against sensitivity
  double margin = 1e-6;
  double tol = 1e-5;    // stop when one iteration improves less than this
  int max_iter = 50;
  std::vector<double> roots;  // initial denominator roots; empty = 0.1 repeated
  double box = 1.0;     // entrywise bound on the stacked numerator
  SolverOptions solver;

  /// Initial denominator coefficients (d_N + 1 of them).
  VectorXd initial_denominator() const;
};

struct DetectReport {
  SolveStatus status = SolveStatus::NumericalFailure;
  FilterForm filter;
  double eta1 = 0.0;  // H2 bound (squared) from noise to residual
  double eta2 = 0.0;  // H_ bound (squared) from fault to residual
  std::vector<double> trace;  // objective after each multiplier step
  int iterations = 0;
  bool converged = false;  // stopping rule met before the iteration cap
  std::string message;
  std::vector<std::string> warnings;

  bool ok() const { return status == SolveStatus::Optimal; }
  double objective(double alpha) const {
    return alpha * eta1 - (1 - alpha) * eta2;
  }
};

/// First n_r rows of the left null basis of Hbar, scaled so the largest
/// entry magnitude is 1. Throws "no decoupling freedom" when the null space
/// has fewer than n_r dimensions.
MatrixXd init_numerator(const MatrixXd& Hbar, int n_r);

/// Alternating optimization: multipliers with the filter fixed, then the
/// filter (numerator and denominator) with P1 and V fixed.
DetectReport synthesize_detector(const DetectSpec& spec);

/// Multiplier step alone: certified (eta1, eta2) of a fixed filter.
DetectReport certify_detector(const DetectSpec& spec, const FilterForm& filter);

struct DetectValidation {
  bool h2_ok = false;
  bool hminus_ok = false;
  bool decoupling_ok = false;
  bool simulation_ok = false;
  double h2_sq = 0.0;          // exact squared H2 norm of the noise channel
  double hminus_sq = 0.0;      // gridded squared H_ index of the fault channel
  double decoupling = 0.0;     // max |Nbar Hbar|
  double simulation = 0.0;     // max |r| under disturbances and inputs only

  bool pass() const {
    return h2_ok && hminus_ok && decoupling_ok && simulation_ok;
  }
};

/// Certificate consistency: exact H2 <= eta1, gridded H_^2 >= eta2 (512
/// points per band), decoupling residual below 1e-8, and a fault-free,
/// noise-free simulation with random disturbances staying below 1e-8.
DetectValidation validate_detector(const DetectReport& report,
                                   const StateSpace& plant,
                                   const FrequencyBands& bands,
                                   unsigned long long seed = 1);

}  // namespace ffde
