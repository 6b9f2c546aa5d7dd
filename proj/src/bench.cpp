#include "ffde/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ffde {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

StateSpace turbine_continuous() {
  VectorXd num(2), den(4);
  num << 1.4, -0.183;
  den << 0.45, 5.911, 2.445, 0.2136;
  StateSpace s = tf_to_ss(num, den);
  s.Bf = s.B;
  s.Df = s.D;
  return s;
}

StateSpace turbine_model() { return discretize_zoh(turbine_continuous(), 0.1); }

std::vector<Index> power_system_offsets(const PowerSystemParams& p) {
  std::vector<Index> off{0};
  for (std::size_t i = 0; i + 1 < p.generators.size(); ++i)
    off.push_back(off.back() + p.generators[i] + 3);
  return off;
}

StateSpace power_system_continuous(const PowerSystemParams& p) {
  const std::size_t areas = p.generators.size();
  const std::vector<Index> off = power_system_offsets(p);
  Index nx = 0;
  for (int g : p.generators) nx += g + 3;

  StateSpace s = StateSpace::zeros(nx, 0, static_cast<Index>(areas), 1, 3, nx);
  s.C.setIdentity();
  s.Dw.setOnes();
  const double line = 2.0 * kPi * p.tie_capacity;
  for (std::size_t i = 0; i < areas; ++i) {
    const Index tie = off[i], w = off[i] + 1;
    const Index agc = off[i] + 2 + p.generators[i];
    const double k = p.w0 / (2.0 * p.h[i] * p.base[i]);
    s.A(w, w) = -k / p.load_damping[i];
    s.A(w, tie) = -k;
    s.Bd(w, static_cast<Index>(i)) = -k;
    for (int g = 0; g < p.generators[i]; ++g) {
      const Index m = off[i] + 2 + g;
      s.A(w, m) = k;
      s.A(m, m) = -1.0 / p.tch;
      s.A(m, w) = -1.0 / (p.tch * p.droop[i]);
      s.A(m, agc) = p.participation[i] / p.tch;
    }
    for (std::size_t j = 0; j < areas; ++j) {
      if (j == i) continue;
      s.A(tie, w) += line;
      s.A(tie, off[j] + 1) -= line;
    }
    s.A(agc, w) = -p.ki[i] * p.bias[i];
    s.A(agc, tie) = -p.ki[i];
  }
  s.Bf(off[0], 0) = line;
  s.Bf(off[1] + 2 + p.generators[1], 1) = -p.ki[1];
  s.Df(off[0] + 1, 2) = 1.0;
  return s;
}

StateSpace power_system_model(const PowerSystemParams& p) {
  return discretize_zoh(power_system_continuous(p), p.Ts);
}

MatrixXd Scenario::fault_matrix() const { return fault_matrix(horizon); }

MatrixXd Scenario::fault_matrix(int T) const {
  MatrixXd F(static_cast<Index>(faults.size()), T);
  for (std::size_t c = 0; c < faults.size(); ++c)
    for (int k = 0; k < T; ++k) F(static_cast<Index>(c), k) = faults[c](k);
  return F;
}

namespace {

std::function<double(int)> after(int onset, std::function<double(int)> g) {
  return [onset, g](int k) { return k >= onset ? g(k) : 0.0; };
}

double sensor_ramp(int k) {
  if (k <= 50) return 0.0;
  if (k <= 80) return 0.005 * (k - 50);
  return 0.15 + 0.02 * std::sin(0.15 * k);
}

double agc_fault(int k) {
  return 0.08 * std::sin(0.15 * k) + 0.03 * std::sin(0.25 * k);
}

std::function<double(int)> zero() {
  return [](int) { return 0.0; };
}

std::vector<std::function<double(int)>> unit_loads() {
  return std::vector<std::function<double(int)>>(3, [](int) { return 1.0; });
}

}  // namespace

std::vector<Scenario> paper_faults() {
  std::vector<Scenario> out;

  Scenario turb;
  turb.name = "turbine_estimation";
  turb.plant = "turbine";
  turb.faults = {[](int k) {
    return 0.05 * std::sin(0.1 * k) + 0.06 * std::sin(0.15 * k);
  }};
  turb.horizon = 600;
  turb.bands = FrequencyBands({{0.0, 0.2}});
  out.push_back(turb);

  Scenario proc;
  proc.name = "power_detection_process";
  proc.plant = "power_system";
  proc.onset = 50;
  proc.faults = {after(50,
                       [](int k) {
                         return 0.05 * std::sin(0.2 * k) +
                                0.06 * std::sin(0.3 * k);
                       }),
                 after(50, agc_fault), zero()};
  proc.disturbances = unit_loads();
  proc.disturbance_jitter = 0.1;
  proc.noise = {"gaussian", 0.1};
  proc.bands = FrequencyBands({{0.0, 0.3}});
  out.push_back(proc);

  Scenario sens = proc;
  sens.name = "power_detection_sensor";
  sens.faults = {zero(), zero(), sensor_ramp};
  out.push_back(sens);

  Scenario est;
  est.name = "power_estimation";
  est.plant = "power_system";
  est.onset = 50;
  est.faults = {after(50,
                      [](int k) {
                        return 0.05 * std::sin(0.8 * k) +
                               0.06 * std::sin(0.65 * k);
                      }),
                after(50, agc_fault), sensor_ramp};
  est.disturbances = unit_loads();
  est.disturbance_jitter = 0.1;
  est.horizon = 400;
  est.bands = FrequencyBands({{0.0, 0.3}, {0.6, 0.9}});
  out.push_back(est);
  return out;
}

Scenario find_scenario(const std::string& name) {
  for (const Scenario& s : paper_faults())
    if (s.name == name) return s;
  throw Error("unknown scenario '" + name + "'");
}

namespace {

VectorXd dft_power(const VectorXd& x) {
  const Index N = x.size();
  VectorXd P(N);
  for (Index k = 0; k < N; ++k) {
    cplx acc = 0.0;
    for (Index n = 0; n < N; ++n)
      acc += x(n) * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * n % N) /
                                        static_cast<double>(N));
    P(k) = std::norm(acc);
  }
  return P;
}

double folded_frequency(Index k, Index N) {
  const double th = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(N);
  return th <= kPi ? th : 2.0 * kPi - th;
}

}  // namespace

double in_band_energy_ratio(const VectorXd& x, const FrequencyBands& bands) {
  require(x.size() > 0, "in_band_energy_ratio: empty signal");
  const VectorXd P = dft_power(x);
  double in = 0.0;
  for (Index k = 0; k < P.size(); ++k)
    if (bands.contains(folded_frequency(k, P.size()))) in += P(k);
  const double total = P.sum();
  return total > 0.0 ? in / total : 1.0;
}

std::vector<double> dft_peaks(const VectorXd& x, int count) {
  const VectorXd P = dft_power(x);
  const Index N = P.size();
  std::vector<Index> idx;
  for (Index k = 1; k <= N / 2; ++k) {
    const double left = P(k - 1), right = k + 1 < N ? P(k + 1) : 0.0;
    if (P(k) >= left && P(k) >= right) idx.push_back(k);
  }
  std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return P(a) > P(b); });
  std::vector<double> out;
  for (int i = 0; i < count && i < static_cast<int>(idx.size()); ++i)
    out.push_back(folded_frequency(idx[static_cast<std::size_t>(i)], N));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ffde
