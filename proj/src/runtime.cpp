#include "ffde/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

#include "ffde/lyapunov.hpp"

namespace ffde {

void ThresholdSpec::validate() const {
  require(far > 0.0 && far <= 1.0, "threshold: far must lie in (0, 1]");
  require(window >= 1, "threshold: window must be at least 1");
  require(n_r >= 1, "threshold: n_r must be at least 1");
  require(lambda >= 0.0, "threshold: lambda must be nonnegative");
  require(eta1 >= 0.0, "threshold: eta1 must be nonnegative");
}

double threshold(const ThresholdSpec& spec) {
  spec.validate();
  const double nr = spec.n_r;
  return spec.lambda *
         std::sqrt(2.0 * nr * spec.eta1 *
                   std::log(2.0 * spec.window * nr / spec.far));
}

double chebyshev_threshold(const ThresholdSpec& spec) {
  spec.validate();
  return spec.lambda * std::sqrt(spec.window * spec.n_r * spec.eta1 / spec.far);
}

double detectability_floor(const ThresholdSpec& spec) {
  require(spec.eta2 > 0.0, "fdr_bound: eta2 must be positive");
  return threshold(spec) * std::sqrt(spec.n_r / spec.eta2);
}

double fdr_bound(const ThresholdSpec& spec) {
  require(spec.eta1 > 0.0, "fdr_bound: eta1 must be positive");
  const double floor = detectability_floor(spec);
  if (!(spec.fault_floor > floor))
    throw Error("fault floor below detectability: need f > " +
                std::to_string(floor));
  const double jth = threshold(spec);
  const double nr = spec.n_r;
  if (spec.lambda == 0.0) return 1.0;
  const double gap = spec.fault_floor * std::sqrt(spec.eta2 / nr) - jth;
  const double expo =
      -gap * gap / (2.0 * spec.eta1 * spec.lambda * spec.lambda);
  return std::max(0.0, 1.0 - 2.0 * spec.window * nr * std::exp(expo));
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "uniform") return NoiseKind::Uniform;
  if (s == "rademacher") return NoiseKind::Rademacher;
  throw Error("unknown noise kind '" + s +
              "' (expected gaussian, uniform or rademacher)");
}

const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::Rademacher: return "rademacher";
  }
  return "?";
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL))) {}

std::uint64_t CounterRng::bits(std::uint64_t index) const {
  return splitmix64(key_ ^ splitmix64(index));
}

double CounterRng::uniform(std::uint64_t index) const {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index) const {
  const std::uint64_t pair = index & ~std::uint64_t{1};
  const double u1 = uniform(pair), u2 = uniform(pair + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (index & 1) ? radius * std::sin(angle) : radius * std::cos(angle);
}

MatrixXd sub_gaussian_noise(NoiseKind kind, double lambda, Index length,
                            Index dims, std::uint64_t seed,
                            std::uint64_t stream) {
  require(lambda >= 0.0, "sub_gaussian_noise: lambda must be nonnegative");
  require(length >= 0 && dims >= 0, "sub_gaussian_noise: negative size");
  MatrixXd out(dims, length);
  const CounterRng rng(seed, stream);
  for (Index k = 0; k < length; ++k)
    for (Index i = 0; i < dims; ++i) {
      const auto idx = static_cast<std::uint64_t>(k * dims + i);
      double v = 0.0;
      switch (kind) {
        case NoiseKind::Gaussian: v = rng.normal(idx); break;
        case NoiseKind::Uniform: v = 2.0 * rng.uniform(idx) - 1.0; break;
        case NoiseKind::Rademacher: v = (rng.bits(idx) >> 63) ? 1.0 : -1.0; break;
      }
      out(i, k) = lambda * v;
    }
  return out;
}

VectorXd window_statistics(const MatrixXd& r, int window) {
  require(window >= 1, "window_statistics: window must be at least 1");
  const Index n = r.cols();
  VectorXd J = VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  if (n < window) return J;
  const VectorXd norms = r.colwise().norm().transpose();
  // Direct sums per window; a running sum would drift over long traces.
  for (Index k = window - 1; k < n; ++k)
    J(k) = norms.segment(k - window + 1, window).sum() / window;
  return J;
}

ResidualTrace ResidualTrace::evaluate(const MatrixXd& r, int window,
                                      double threshold) {
  ResidualTrace t;
  t.r = r;
  t.window = window;
  t.threshold = threshold;
  t.J = window_statistics(r, window);
  t.alarm.resize(r.cols());
  for (Index k = 0; k < r.cols(); ++k) t.alarm[k] = t.J(k) > threshold;
  return t;
}

int ResidualTrace::first_alarm() const {
  for (std::size_t k = 0; k < alarm.size(); ++k)
    if (alarm[k]) return static_cast<int>(k);
  return -1;
}

void ResidualTrace::write_csv(std::ostream& os) const {
  os << "k";
  for (Index i = 0; i < r.rows(); ++i) os << ",r" << i;
  os << ",J,alarm\n";
  char buf[64];
  for (Index k = 0; k < r.cols(); ++k) {
    os << k;
    for (Index i = 0; i < r.rows(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", r(i, k));
      os << buf;
    }
    if (std::isnan(J(k)))
      os << ",";
    else {
      std::snprintf(buf, sizeof buf, ",%.17g", J(k));
      os << buf;
    }
    os << ',' << (alarm[k] ? 1 : 0) << '\n';
  }
}

RateEstimate wilson_interval(long hits, long trials, double z) {
  require(trials > 0 && hits >= 0 && hits <= trials,
          "wilson_interval: need 0 <= hits <= trials, trials > 0");
  RateEstimate e;
  e.hits = hits;
  e.trials = trials;
  const double n = static_cast<double>(trials);
  const double p = hits / n;
  e.rate = p;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half =
      z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  e.lower = std::max(0.0, centre - half);
  e.upper = std::min(1.0, centre + half);
  return e;
}

namespace {

double decoupling_residual(const FilterForm& f, const DaeForm& dae) {
  const MatrixXd NH = f.stacked() * stack_nullspace(dae, f.d_N());
  return NH.size() ? NH.cwiseAbs().maxCoeff() : 0.0;
}

// Counts windows whose statistic exceeds the threshold.
long count_alarms(const CanonicalRealization& real, const MonteCarloSpec& spec,
                  double jth, int burn, Index nw, const FaultSignal& fault,
                  Index nf, std::uint64_t stream0) {
  const int T = spec.threshold.window;
  const int horizon = burn + T;
  const double lambda = spec.threshold.lambda;
  const int nthreads =
      spec.threads > 0 ? spec.threads
                       : std::max(1u, std::thread::hardware_concurrency());

  // Fault trajectory is shared by every trial.
  MatrixXd F = MatrixXd::Zero(nf, horizon);
  if (fault)
    for (int k = 0; k < horizon; ++k) {
      const VectorXd v = fault(k);
      require(v.size() == nf, "monte_carlo_rates: fault signal has wrong size");
      F.col(k) = v;
    }
  const MatrixXd fault_drive = real.Bf * F;

  std::vector<long> counts(nthreads, 0);
  std::atomic<long> next{0};
  auto worker = [&](int tid) {
    const Index n = real.A.rows();
    VectorXd x(n), xn(n);
    for (long t; (t = next.fetch_add(1)) < spec.trials;) {
      const MatrixXd w =
          sub_gaussian_noise(spec.noise, lambda, horizon, nw, spec.seed,
                             stream0 + static_cast<std::uint64_t>(t));
      x.setZero();
      double sum = 0.0;
      for (int k = 0; k < horizon; ++k) {
        if (k >= burn) sum += (real.C * x).norm();
        xn.noalias() = real.A * x;
        if (nw > 0) xn.noalias() += real.Bw * w.col(k);
        xn += fault_drive.col(k);
        x.swap(xn);
      }
      if (sum / T > jth) ++counts[tid];
    }
  };
  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker, i);
    for (auto& th : pool) th.join();
  }
  long total = 0;
  for (long c : counts) total += c;
  return total;
}

}  // namespace

RateReport monte_carlo_rates(const StateSpace& plant, const FilterForm& filter,
                             const MonteCarloSpec& spec,
                             const FaultSignal& fault) {
  plant.validate();
  require(spec.trials > 0, "monte_carlo_rates: trials must be positive");
  const DaeForm dae = to_dae(plant);
  const double dec = decoupling_residual(filter, dae);
  require(dec < 1e-8, "monte_carlo_rates: filter does not decouple the "
                      "disturbances (max |N H| = " + std::to_string(dec) + ")");
  const double rho = filter.spectral_radius();
  require(rho < 1.0, "monte_carlo_rates: filter is not Schur stable");

  RateReport rep;
  rep.seed = spec.seed;
  rep.threshold = threshold(spec.threshold);
  rep.burn_in = spec.burn_in >= 0
                    ? spec.burn_in
                    : static_cast<int>(std::ceil(5.0 / (1.0 - rho)));
  const CanonicalRealization real = realize_filter(filter, dae);
  const auto trials = static_cast<std::uint64_t>(spec.trials);

  const long fa = count_alarms(real, spec, rep.threshold, rep.burn_in,
                               plant.nw(), nullptr, plant.nf(), 0);
  rep.far = wilson_interval(fa, spec.trials);
  if (fault) {
    rep.has_fault = true;
    const long hits = count_alarms(real, spec, rep.threshold, rep.burn_in,
                                   plant.nw(), fault, plant.nf(), trials);
    rep.detection = wilson_interval(hits, spec.trials);
  }
  return rep;
}

MatrixXd simulate_residual(const StateSpace& plant, const FilterForm& filter,
                           const MatrixXd& u, const MatrixXd& d,
                           const MatrixXd& w, const MatrixXd& f) {
  const MatrixXd y =
      simulate_plant(plant, VectorXd::Zero(plant.nx()), u, d, w, f);
  return apply_filter(filter, to_dae(plant), y, u);
}

MatrixXd residual_covariance_bound(const StateSpace& plant,
                                   const FilterForm& filter, double lambda) {
  const CanonicalRealization real = realize_filter(filter, to_dae(plant));
  const Index nr = real.C.rows();
  if (real.Bw.cols() == 0) return MatrixXd::Zero(nr, nr);
  const MatrixXd P =
      solve_discrete_lyapunov(real.A, real.Bw * real.Bw.transpose());
  return lambda * lambda * real.C * P * real.C.transpose();
}

}  // namespace ffde
