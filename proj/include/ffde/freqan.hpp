#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ffde/sysmodel.hpp"

namespace ffde {

/// Ordered, pairwise disjoint frequency intervals in radians per sample.
class FrequencyBands {
 public:
  FrequencyBands() = default;
  /// Throws Error unless every band lies in [-pi, pi], has theta1 <= theta2,
  /// and the bands are nonempty and disjoint. Bands are sorted on entry.
  explicit FrequencyBands(std::vector<std::pair<double, double>> bands);

  std::size_t size() const { return bands_.size(); }
  const std::pair<double, double>& operator[](std::size_t m) const {
    return bands_[m];
  }
  const std::vector<std::pair<double, double>>& bands() const { return bands_; }

  double center(std::size_t m) const;
  double half_width(std::size_t m) const;
  bool contains(double theta, double tol = 1e-12) const;

  /// `per_band` equally spaced points per band, endpoints included.
  std::vector<double> grid(int per_band) const;

 private:
  std::vector<std::pair<double, double>> bands_;
};

/// Singular values of a transfer function sampled on a frequency grid.
struct GriddedSpectrum {
  std::vector<double> theta;
  std::vector<double> sigma_min;
  std::vector<double> sigma_max;

  /// CSV with header row "theta,sigma_min,sigma_max".
  void write_csv(std::ostream& os) const;
};

/// C (zI - A)^{-1} B + D at z = e^{j theta}. Throws when the resolvent is
/// numerically singular (reciprocal condition below 1e-12).
MatrixXcd eval_tf(const Realization& sys, double theta);

/// N(z) M / a(z) at z = e^{j theta}, with the monic leading term of a implied.
MatrixXcd eval_tf(const FilterForm& f, const MatrixXd& M, double theta);

/// Squared H2 norm Trace(C P C^T + D D^T), P the controllability Gramian.
/// Throws "H2 undefined" when A is not Schur stable.
double h2_norm_sq(const Realization& sys);

struct GridOptions {
  int per_band = 512;
  /// Evaluate only nonnegative frequencies. Valid for real-coefficient
  /// systems, whose singular values are even in theta.
  bool conjugate_symmetry = false;
};

GriddedSpectrum spectrum(const Realization& sys, const FrequencyBands& bands,
                         const GridOptions& opts = {});

/// Minimum of sigma_min over the grid: an upper bound on the true H_ index.
double hminus_index(const Realization& sys, const FrequencyBands& bands,
                    const GridOptions& opts = {});

/// Maximum of sigma_max over the grid: a lower bound on the restricted
/// H-infinity norm.
double hinf_restricted(const Realization& sys, const FrequencyBands& bands,
                       const GridOptions& opts = {});

/// (1/2pi) int Psi_W Psi_W^* dtheta, where
/// Psi_W(q) = -[W; qW; ...; q^{d_N} W] / a(q), computed from the
/// controllability Gramian of a realization of Psi_W.
MatrixXd phi_matrix(const VectorXd& a, const MatrixXd& W, int d_N);

/// Psi_G(e^{j theta}) split into real and imaginary parts.
struct PsiSamples {
  std::vector<double> theta;
  std::vector<MatrixXd> re;
  std::vector<MatrixXd> im;
};

PsiSamples psi_g_samples(const VectorXd& a, const MatrixXd& G, int d_N,
                         const std::vector<double>& theta);

/// Psi_G(e^{j theta}) as a complex matrix.
MatrixXcd psi(const VectorXd& a, const MatrixXd& G, int d_N, double theta);

struct FeasibilityReport {
  bool pass = false;
  bool observable = false;
  bool rank_ok = false;
  Index expected_rank = 0;
  /// Sample points (radius, theta, measured rank) where the rank test failed.
  struct Sample {
    double radius;
    double theta;
    Index rank;
  };
  std::vector<Sample> offending;
  std::string message;
};

/// Numerical check of the fault-detectability rank condition on sampled
/// points phi e^{j theta} outside the unit circle, plus observability of
/// (A, C). Singular values below 1e-8 sigma_max count as zero.
FeasibilityReport feasibility_check(const StateSpace& sys,
                                    const FrequencyBands& bands,
                                    int per_band = 16);

/// Numerical rank with threshold rel_tol * sigma_max.
Index numerical_rank(const MatrixXcd& M, double rel_tol = 1e-8);
Index numerical_rank(const MatrixXd& M, double rel_tol = 1e-8);

}  // namespace ffde
