#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ffde/sysmodel.hpp"

namespace ffde {

/// Inputs of the probabilistic threshold and detection-rate bounds.
struct ThresholdSpec {
  double lambda = 0.1;    // sub-Gaussian parameter of the noise
  double far = 1e-3;      // acceptable false-alarm rate, in (0, 1]
  int window = 10;        // samples per evaluation window
  int n_r = 1;
  double eta1 = 0.0;      // certified H2 bound (squared) noise -> residual
  double eta2 = 0.0;      // certified H_ bound (squared) fault -> residual
  double fault_floor = 0.0;

  void validate() const;
};

/// lambda * sqrt(2 n_r eta1 ln(2 T n_r / far)).
double threshold(const ThresholdSpec& spec);

/// Threshold from Chebyshev's inequality, lambda * sqrt(T n_r eta1 / far).
double chebyshev_threshold(const ThresholdSpec& spec);

/// Smallest fault magnitude for which a detection rate can be quoted:
/// J_th * sqrt(n_r / eta2).
double detectability_floor(const ThresholdSpec& spec);

/// Guaranteed detection rate for faults with |f(k)| >= fault_floor.
/// Throws "fault floor below detectability" unless the floor exceeds
/// detectability_floor(spec).
double fdr_bound(const ThresholdSpec& spec);

enum class NoiseKind { Gaussian, Uniform, Rademacher };

NoiseKind parse_noise_kind(const std::string& s);
const char* to_string(NoiseKind k);

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, index), so streams can be consumed in any order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t bits(std::uint64_t index) const;
  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t index) const;
  /// Standard normal; indices 2i and 2i+1 share one Box-Muller pair.
  double normal(std::uint64_t index) const;

 private:
  std::uint64_t key_;
};

/// dims x length i.i.d. zero-mean samples with sub-Gaussian parameter at
/// most lambda: N(0, lambda^2), uniform on [-lambda, lambda], or +/-lambda.
MatrixXd sub_gaussian_noise(NoiseKind kind, double lambda, Index length,
                            Index dims, std::uint64_t seed,
                            std::uint64_t stream = 0);

/// Sliding-window statistics J(k) = (1/T) sum_{i=k-T+1}^{k} |r(i)|_2 for
/// every k >= T - 1 (stride 1).
VectorXd window_statistics(const MatrixXd& r, int window);

/// Residual sequence with its window statistics and alarms.
struct ResidualTrace {
  MatrixXd r;                // one column per sample
  int window = 1;
  double threshold = 0.0;
  VectorXd J;                // J(k), NaN while the first window fills
  std::vector<bool> alarm;   // J(k) > threshold

  static ResidualTrace evaluate(const MatrixXd& r, int window,
                                double threshold);
  /// First alarm sample index, or -1.
  int first_alarm() const;
  /// CSV with header "k,r0,...,J,alarm".
  void write_csv(std::ostream& os) const;
};

struct RateEstimate {
  long hits = 0;
  long trials = 0;
  double rate = 0.0;
  double lower = 0.0;  // 95% Wilson interval
  double upper = 0.0;
};

/// Wilson score interval for hits out of trials at normal quantile z.
RateEstimate wilson_interval(long hits, long trials, double z = 1.959963984540054);

/// Fault signal: value of every fault channel at sample k (burn-in included).
using FaultSignal = std::function<VectorXd(int)>;

struct MonteCarloSpec {
  ThresholdSpec threshold;
  NoiseKind noise = NoiseKind::Gaussian;
  long trials = 10000;
  std::uint64_t seed = 1;
  int burn_in = -1;   // < 0: ceil(5 / (1 - rho)), rho the filter pole radius
  int threads = 1;    // 0 uses every hardware thread
};

struct RateReport {
  double threshold = 0.0;
  int burn_in = 0;
  std::uint64_t seed = 0;
  RateEstimate far;        // fault-free windows
  RateEstimate detection;  // windows with the fault applied
  bool has_fault = false;
};

/// Residual windows of the filter's noise and fault channels, each trial
/// from zero state with its own noise stream (stream = trial index for the
/// fault-free runs, trials + index with the fault). Throws when the filter
/// does not decouple the disturbances (max |N H| >= 1e-8).
RateReport monte_carlo_rates(const StateSpace& plant, const FilterForm& filter,
                             const MonteCarloSpec& spec,
                             const FaultSignal& fault = nullptr);

/// Residual of one run of the plant and filter: disturbances d, inputs u,
/// noise w and faults f given column-wise.
MatrixXd simulate_residual(const StateSpace& plant, const FilterForm& filter,
                           const MatrixXd& u, const MatrixXd& d,
                           const MatrixXd& w, const MatrixXd& f);

/// Steady-state covariance bound lambda^2 N Phi N^T of the residual, from
/// the Gramian of the noise channel.
MatrixXd residual_covariance_bound(const StateSpace& plant,
                                   const FilterForm& filter, double lambda);

}  // namespace ffde
