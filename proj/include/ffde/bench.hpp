#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ffde/freqan.hpp"
#include "ffde/sysmodel.hpp"

namespace ffde {

/// Hydraulic turbine (-0.183 s + 1.4) / (0.2136 s^3 + 2.445 s^2 + 5.911 s + 0.45)
/// driven by valve input u + f_u, realized in controllable canonical form and
/// ZOH-discretized at Ts = 0.1 s. No disturbance or noise channels.
StateSpace turbine_model();

/// Continuous-time turbine realization (before discretization).
StateSpace turbine_continuous();

/// Parameters of the three-area load-frequency model.
struct PowerSystemParams {
  double w0 = 60.0;
  std::vector<double> h{4.41, 4.15, 3.46};
  std::vector<double> base{1500.0, 2100.0, 1700.0};
  std::vector<double> droop{0.002, 0.0014, 0.0018};
  std::vector<double> load_damping{0.0064, 0.0045, 0.0056};
  std::vector<int> generators{2, 3, 2};
  std::vector<double> bias{500.0064, 700.0045, 566.6723};
  std::vector<double> ki{0.65, 0.65, 0.65};
  std::vector<double> participation{1.0 / 2.0, 1.0 / 3.0, 1.0 / 2.0};
  double tie_capacity = 2100.0;  // same for lines 1-2, 1-3, 2-3
  double tch = 1.4950;
  double Ts = 0.1;
};

/// Continuous-time three-area model. Per-area state order is
/// [tie power, frequency, generator powers..., AGC]. Disturbances are the
/// three area loads; faults are (tie line 1-2, AGC of area 2, frequency
/// sensor of area 1); one noise channel enters every output.
StateSpace power_system_continuous(const PowerSystemParams& p = {});

/// ZOH discretization of power_system_continuous at p.Ts.
StateSpace power_system_model(const PowerSystemParams& p = {});

/// First state index of each area in the stacked state.
std::vector<Index> power_system_offsets(const PowerSystemParams& p = {});

struct NoiseSpec {
  std::string kind = "gaussian";  // gaussian | uniform | rademacher
  double lambda = 0.0;
};

/// Fault and disturbance signals of a case study.
struct Scenario {
  std::string name;
  std::string plant;  // "turbine" or "power_system"
  std::vector<std::function<double(int)>> faults;        // per fault channel
  std::vector<std::function<double(int)>> disturbances;  // deterministic part
  double disturbance_jitter = 0.0;  // +/- amplitude of uniform load noise
  NoiseSpec noise;
  int horizon = 300;
  int onset = 0;
  FrequencyBands bands;

  /// Fault samples k = 0..horizon-1, one row per channel.
  MatrixXd fault_matrix() const;
  MatrixXd fault_matrix(int horizon) const;
};

/// Turbine estimation, power-system detection (process and sensor faults)
/// and power-system estimation scenarios.
std::vector<Scenario> paper_faults();

/// Look up a bundled scenario by name; throws when unknown.
Scenario find_scenario(const std::string& name);

/// Fraction of DFT energy of x (length N) at frequencies |theta| inside
/// the bands.
double in_band_energy_ratio(const VectorXd& x, const FrequencyBands& bands);

/// Frequencies (rad/sample, in [0, pi]) of the `count` largest DFT peaks.
std::vector<double> dft_peaks(const VectorXd& x, int count);

}  // namespace ffde
