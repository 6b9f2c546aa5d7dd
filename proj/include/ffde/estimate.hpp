#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ffde/conic.hpp"
#include "ffde/freqan.hpp"
#include "ffde/sysmodel.hpp"

namespace ffde {

enum class SampleRule { Midpoint, Endpoints };

SampleRule parse_sample_rule(const std::string& s);
const char* to_string(SampleRule r);

/// Fault-estimation design problem. The residual dimension equals n_f.
struct EstimSpec {
  StateSpace plant;
  FrequencyBands bands;
  int d_N = 4;
  double beta = 0.0;  // weight of the noise term; 0 drops it
  VectorXd a;         // fixed denominator; empty means (q - 0.1)^{d_N+1}
  int samples_per_band = 6;
  SampleRule rule = SampleRule::Midpoint;
  std::vector<double> samples;  // explicit sample set, overrides the rule
  double margin = 1e-6;
  double ao_tol = 1e-5;
  int max_iter = 50;
  bool optimize_denominator = false;
  SolverOptions solver;

  VectorXd denominator() const;
  std::vector<double> sample_set() const;
};

struct EstimReport {
  std::string method;  // "sampled", "exact", "closed_form"
  SolveStatus status = SolveStatus::NumericalFailure;
  FilterForm filter;
  double eta1 = 0.0;  // Trace(N Phi N^T) bound (0 when beta = 0 and unused)
  double eta3 = 0.0;  // sampled or certified restricted-gain bound (squared)
  std::vector<double> samples;
  std::vector<double> trace;  // objective after each accepted iteration
  int iterations = 0;
  std::string message;

  bool ok() const { return status == SolveStatus::Optimal; }
  double objective(double beta) const { return beta * eta1 + (1 - beta) * eta3; }
};

struct GapReport {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_ok = false;
  bool upper_ok = false;
  EstimReport sampled;
  EstimReport exact;
};

/// kappa points per band: cell centres (Midpoint) or an endpoint-inclusive
/// uniform grid (Endpoints).
std::vector<double> sample_points(const FrequencyBands& bands, int per_band,
                                  SampleRule rule);

/// First `count` binary van der Corput points of [lo, hi] (midpoint,
/// quarter points, ...). Each prefix contains the previous one and the
/// endpoints are never drawn.
std::vector<double> nested_samples(double lo, double hi, int count);

/// Frequency-sampled program with exact spectral-norm constraints.
EstimReport synthesize_sampled(const EstimSpec& spec);

/// Frobenius-surrogate minimizer from the KKT system (pseudo-inverse with
/// cutoff 1e-10 sigma_max). Returns the stacked numerator.
MatrixXd closed_form(const EstimSpec& spec);

/// beta Trace(N Phi N^T) + (1 - beta)/kappa sum_i ||M_i(N)||_F^2.
double frobenius_objective(const EstimSpec& spec, const MatrixXd& Nbar);

/// Alternating optimization of the exact program from `init`.
EstimReport synthesize_exact(const EstimSpec& spec, const FilterForm& init);

/// Minimal certified restricted gain (squared) of a fixed filter: one
/// multiplier solve of the exact program.
EstimReport certify_estimator(const EstimSpec& spec, const FilterForm& filter);

/// Lower bound from the sampled program, upper bound from the exact program
/// started at the sampled solution.
GapReport suboptimality_gap(const EstimSpec& spec);

/// ||T_fr(e^{j theta}) - I||_2 at every theta.
std::vector<double> sample_errors(const FilterForm& f, const DaeForm& dae,
                                  const std::vector<double>& theta);

/// CSV "theta,error_norm" with one row per sample.
void write_sample_csv(std::ostream& os, const std::vector<double>& theta,
                      const std::vector<double>& err);

}  // namespace ffde
