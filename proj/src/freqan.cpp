#include "ffde/freqan.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/SVD>

#include "ffde/lyapunov.hpp"

namespace ffde {

namespace {

constexpr double kPi = std::numbers::pi;

VectorXd singular_values(const MatrixXcd& M) {
  if (M.size() == 0) return VectorXd::Zero(1);
  return Eigen::JacobiSVD<MatrixXcd>(M).singularValues();
}

std::vector<double> evaluation_grid(const FrequencyBands& bands,
                                    const GridOptions& opts) {
  require(bands.size() > 0, "frequency grid: empty bands");
  require(opts.per_band >= 2, "frequency grid: need at least 2 points per band");
  if (!opts.conjugate_symmetry) return bands.grid(opts.per_band);
  // Fold each band onto theta >= 0; singular values are even in theta.
  std::vector<double> out;
  for (const auto& [lo, hi] : bands.bands()) {
    double a = lo, b = hi;
    if (hi <= 0.0) {
      a = -hi;
      b = -lo;
    } else if (lo < 0.0) {
      a = 0.0;
      b = std::max(-lo, hi);
    }
    const std::vector<double> g =
        FrequencyBands({{a, b}}).grid(opts.per_band);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

}  // namespace

FrequencyBands::FrequencyBands(std::vector<std::pair<double, double>> bands)
    : bands_(std::move(bands)) {
  require(!bands_.empty(), "FrequencyBands: no bands given");
  std::sort(bands_.begin(), bands_.end());
  for (const auto& [lo, hi] : bands_) {
    require(std::isfinite(lo) && std::isfinite(hi),
            "FrequencyBands: non-finite band edge");
    require(lo <= hi, "FrequencyBands: band with theta1 > theta2");
    require(lo >= -kPi - 1e-12 && hi <= kPi + 1e-12,
            "FrequencyBands: band outside [-pi, pi]");
  }
  for (std::size_t m = 1; m < bands_.size(); ++m)
    require(bands_[m - 1].second < bands_[m].first,
            "FrequencyBands: bands overlap");
}

double FrequencyBands::center(std::size_t m) const {
  return 0.5 * (bands_[m].first + bands_[m].second);
}

double FrequencyBands::half_width(std::size_t m) const {
  return 0.5 * (bands_[m].second - bands_[m].first);
}

bool FrequencyBands::contains(double theta, double tol) const {
  for (const auto& [lo, hi] : bands_)
    if (theta >= lo - tol && theta <= hi + tol) return true;
  return false;
}

std::vector<double> FrequencyBands::grid(int per_band) const {
  require(per_band >= 1, "FrequencyBands::grid: per_band must be positive");
  std::vector<double> out;
  for (const auto& [lo, hi] : bands_) {
    if (per_band == 1 || hi == lo) {
      out.push_back(per_band == 1 ? 0.5 * (lo + hi) : lo);
      continue;
    }
    for (int i = 0; i < per_band; ++i)
      out.push_back(lo + (hi - lo) * static_cast<double>(i) / (per_band - 1));
  }
  return out;
}

void GriddedSpectrum::write_csv(std::ostream& os) const {
  os << "theta,sigma_min,sigma_max\n";
  os.precision(17);
  for (std::size_t i = 0; i < theta.size(); ++i)
    os << theta[i] << ',' << sigma_min[i] << ',' << sigma_max[i] << '\n';
}

MatrixXcd eval_tf(const Realization& sys, double theta) {
  const cplx z = std::polar(1.0, theta);
  MatrixXcd out = sys.D.cast<cplx>();
  if (out.size() == 0) out = MatrixXcd::Zero(sys.outputs(), sys.inputs());
  if (sys.order() == 0) return out;
  MatrixXcd R = -sys.A.cast<cplx>();
  R.diagonal().array() += z;
  Eigen::PartialPivLU<MatrixXcd> lu(R);
  require(lu.rcond() > 1e-12, "eval_tf: near-singular resolvent at theta=" +
                                  std::to_string(theta));
  out += sys.C.cast<cplx>() * lu.solve(sys.B.cast<cplx>());
  return out;
}

MatrixXcd eval_tf(const FilterForm& f, const MatrixXd& M, double theta) {
  const cplx z = std::polar(1.0, theta);
  const cplx den = eval_denominator(f.a, z);
  require(std::abs(den) > 1e-12, "eval_tf: pole on the unit circle");
  MatrixXcd num = MatrixXcd::Zero(f.n_r(), f.width());
  cplx zi = 1.0;
  for (const MatrixXd& Ni : f.N) {
    num += zi * Ni.cast<cplx>();
    zi *= z;
  }
  return num * M.cast<cplx>() / den;
}

double h2_norm_sq(const Realization& sys) {
  double value = sys.D.size() ? sys.D.squaredNorm() : 0.0;
  if (sys.order() == 0) return value;
  require(spectral_radius(sys.A) < 1.0, "H2 undefined: A is not Schur stable");
  const MatrixXd P = solve_discrete_lyapunov(sys.A, sys.B * sys.B.transpose());
  return value + (sys.C * P * sys.C.transpose()).trace();
}

GriddedSpectrum spectrum(const Realization& sys, const FrequencyBands& bands,
                         const GridOptions& opts) {
  GriddedSpectrum s;
  s.theta = evaluation_grid(bands, opts);
  for (double th : s.theta) {
    const VectorXd sv = singular_values(eval_tf(sys, th));
    s.sigma_min.push_back(sv.minCoeff());
    s.sigma_max.push_back(sv.maxCoeff());
  }
  return s;
}

double hminus_index(const Realization& sys, const FrequencyBands& bands,
                    const GridOptions& opts) {
  const GriddedSpectrum s = spectrum(sys, bands, opts);
  return *std::min_element(s.sigma_min.begin(), s.sigma_min.end());
}

double hinf_restricted(const Realization& sys, const FrequencyBands& bands,
                       const GridOptions& opts) {
  const GriddedSpectrum s = spectrum(sys, bands, opts);
  return *std::max_element(s.sigma_max.begin(), s.sigma_max.end());
}

MatrixXd phi_matrix(const VectorXd& a, const MatrixXd& W, int d_N) {
  const Index n = a.size();
  const Index nw = W.cols(), h = W.rows();
  require(n >= 1 && d_N >= 0 && d_N < n,
          "phi_matrix: need d_N <= d_a for a proper Psi_W");
  const MatrixXd Ac = companion(a).transpose();  // controllable form
  require(spectral_radius(Ac) < 1.0, "phi_matrix: unstable denominator");
  MatrixXd Phi = MatrixXd::Zero((d_N + 1) * h, (d_N + 1) * h);
  if (nw == 0) return Phi;

  // State i carries q^i w / a(q); block row i of Psi_W reads -W times it.
  const MatrixXd I = MatrixXd::Identity(nw, nw);
  MatrixXd A = MatrixXd::Zero(n * nw, n * nw);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      if (Ac(r, c) != 0.0) A.block(r * nw, c * nw, nw, nw) = Ac(r, c) * I;
  MatrixXd B = MatrixXd::Zero(n * nw, nw);
  B.bottomRows(nw) = I;
  MatrixXd C = MatrixXd::Zero((d_N + 1) * h, n * nw);
  for (Index i = 0; i <= d_N; ++i) C.block(i * h, i * nw, h, nw) = -W;

  const MatrixXd P = solve_discrete_lyapunov(A, B * B.transpose());
  Phi = C * P * C.transpose();
  return 0.5 * (Phi + Phi.transpose());
}

MatrixXcd psi(const VectorXd& a, const MatrixXd& G, int d_N, double theta) {
  const cplx z = std::polar(1.0, theta);
  const cplx den = eval_denominator(a, z);
  require(std::abs(den) > 1e-12, "psi: pole on the unit circle");
  const Index h = G.rows();
  MatrixXcd out((d_N + 1) * h, G.cols());
  cplx zi = 1.0;
  for (int i = 0; i <= d_N; ++i) {
    out.middleRows(i * h, h) = -(zi / den) * G.cast<cplx>();
    zi *= z;
  }
  return out;
}

PsiSamples psi_g_samples(const VectorXd& a, const MatrixXd& G, int d_N,
                         const std::vector<double>& theta) {
  require(spectral_radius(companion(a)) < 1.0,
          "psi_g_samples: unstable denominator");
  PsiSamples s;
  s.theta = theta;
  for (double th : theta) {
    const MatrixXcd P = psi(a, G, d_N, th);
    s.re.push_back(P.real());
    s.im.push_back(P.imag());
  }
  return s;
}

Index numerical_rank(const MatrixXcd& M, double rel_tol) {
  if (M.size() == 0) return 0;
  const VectorXd sv = Eigen::JacobiSVD<MatrixXcd>(M).singularValues();
  if (sv(0) == 0.0) return 0;
  return (sv.array() > rel_tol * sv(0)).count();
}

Index numerical_rank(const MatrixXd& M, double rel_tol) {
  return numerical_rank(MatrixXcd(M.cast<cplx>()), rel_tol);
}

FeasibilityReport feasibility_check(const StateSpace& sys,
                                    const FrequencyBands& bands,
                                    int per_band) {
  sys.validate();
  FeasibilityReport rep;
  const Index nx = sys.nx(), ny = sys.ny(), nd = sys.nd(), nf = sys.nf();

  MatrixXd O(nx * ny, nx);
  MatrixXd CA = sys.C;
  for (Index k = 0; k < nx; ++k) {
    O.middleRows(k * ny, ny) = CA;
    CA = CA * sys.A;
  }
  rep.observable = numerical_rank(O) == nx;

  MatrixXd Bd0 = MatrixXd::Zero(nx + ny, nd);
  Bd0.topRows(nx) = sys.Bd;
  rep.expected_rank = nx + numerical_rank(Bd0) + nf;
  rep.rank_ok = rep.expected_rank <= nx + ny;

  MatrixXcd M = MatrixXcd::Zero(nx + ny, nx + nd + nf);
  M.block(0, nx, nx, nd) = sys.Bd.cast<cplx>();
  M.block(0, nx + nd, nx, nf) = sys.Bf.cast<cplx>();
  M.block(nx, 0, ny, nx) = sys.C.cast<cplx>();
  M.block(nx, nx + nd, ny, nf) = sys.Df.cast<cplx>();
  for (double radius : {1.01, 1.1, 2.0}) {
    for (double th : bands.grid(std::max(per_band, 2))) {
      const cplx q = std::polar(radius, th);
      M.topLeftCorner(nx, nx) = sys.A.cast<cplx>();
      M.topLeftCorner(nx, nx).diagonal().array() -= q;
      const Index r = numerical_rank(M);
      if (r != rep.expected_rank) {
        rep.rank_ok = false;
        rep.offending.push_back({radius, th, r});
      }
    }
  }
  rep.pass = rep.observable && rep.rank_ok;
  if (!rep.observable) rep.message = "observability: (A, C) is not observable";
  if (!rep.rank_ok) {
    if (!rep.message.empty()) rep.message += "; ";
    rep.message += "rank condition fails at " +
                   std::to_string(rep.offending.size()) +
                   " sample points (expected rank " +
                   std::to_string(rep.expected_rank) + ")";
  }
  return rep;
}

}  // namespace ffde
