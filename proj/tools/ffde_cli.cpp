// ffde command-line driver: synthesis, thresholds, simulation, validation.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ffde/bench.hpp"
#include "ffde/detect.hpp"
#include "ffde/estimate.hpp"
#include "ffde/io.hpp"
#include "ffde/runtime.hpp"

namespace fs = std::filesystem;
using namespace ffde;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

struct Run {
  std::string command;
  Json cfg = Json::object();
  fs::path config_dir = ".";
  fs::path out_dir = "out";
  Manifest manifest;

  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    return cfg.contains(key) ? cfg.at(key).get<T>() : fallback;
  }
  const Json& need(const std::string& key) const {
    if (!cfg.contains(key))
      throw Error(command + ": missing required field '" + key + "'");
    return cfg.at(key);
  }

  // Input files resolve against the working directory, then the config's.
  fs::path resolve(const std::string& p) const {
    fs::path path(p);
    if (path.is_absolute() || fs::exists(path)) return path;
    return config_dir / path;
  }
  std::string read_input(const std::string& name, const std::string& p) {
    const fs::path path = resolve(p);
    if (!fs::exists(path))
      throw Error(command + ": input file '" + p + "' does not exist");
    std::string text = ffde::read_file(path.string());
    manifest.input_hashes[name] = hash_hex(fnv1a64(text));
    return text;
  }
  void write(const std::string& name, const std::string& text) {
    fs::create_directories(out_dir);
    ffde::write_file((out_dir / name).string(), text);
    manifest.outputs.push_back(name);
  }
  void write_json(const std::string& name, const Json& j) {
    write(name, j.dump(2) + "\n");
  }
};

StateSpace load_plant(Run& run) {
  const std::string p = run.get<std::string>("plant", "");
  if (p.empty()) throw Error(run.command + ": missing required field 'plant'");
  if (p == "turbine") return turbine_model();
  if (p == "power_system") return power_system_model();
  return state_space_from_json(Json::parse(run.read_input("plant", p)));
}

FrequencyBands load_bands(const Run& run) {
  return bands_from_json(run.need("bands"));
}

SolverOptions solver_options(const Run& run) {
  SolverOptions o;
  o.tol = run.get("solver_tol", o.tol);
  o.verbose = run.get("verbose", false);
  return o;
}

int status_exit(SolveStatus s) {
  if (s == SolveStatus::Optimal) return kExitOk;
  if (s == SolveStatus::Infeasible) return kExitInfeasible;
  return kExitError;
}

std::string trace_csv(const std::vector<double>& trace) {
  std::ostringstream os;
  os << "iteration,objective\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace[i]);
    os << buf;
  }
  return os.str();
}

DetectSpec detect_spec(Run& run) {
  DetectSpec s;
  s.plant = load_plant(run);
  s.bands = load_bands(run);
  s.n_r = run.get("n_r", s.n_r);
  s.d_N = run.get("d_N", s.d_N);
  s.alpha = run.get("alpha", s.alpha);
  s.margin = run.get("margin", s.margin);
  s.tol = run.get("tol", s.tol);
  s.max_iter = run.get("max_iter", s.max_iter);
  s.box = run.get("box", s.box);
  s.roots = run.get("roots", s.roots);
  s.solver = solver_options(run);
  return s;
}

EstimSpec estim_spec(Run& run) {
  EstimSpec s;
  s.plant = load_plant(run);
  s.bands = load_bands(run);
  s.d_N = run.get("d_N", s.d_N);
  s.beta = run.get("beta", s.beta);
  if (run.cfg.contains("a")) s.a = vector_from_json(run.cfg.at("a"));
  if (run.cfg.contains("roots")) {
    const auto r = run.cfg.at("roots").get<std::vector<double>>();
    VectorXcd roots(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) roots(i) = r[i];
    s.a = monic_from_roots(roots);
  }
  s.samples_per_band = run.get("samples_per_band", s.samples_per_band);
  s.rule = parse_sample_rule(run.get<std::string>("sampling", "midpoint"));
  s.samples = run.get("samples", s.samples);
  s.margin = run.get("margin", s.margin);
  s.ao_tol = run.get("tol", s.ao_tol);
  s.max_iter = run.get("max_iter", s.max_iter);
  s.optimize_denominator = run.get("optimize_denominator", false);
  s.solver = solver_options(run);
  return s;
}

ThresholdSpec threshold_spec(Run& run) {
  ThresholdSpec t;
  t.lambda = run.get("lambda", t.lambda);
  t.far = run.get("far", t.far);
  t.window = run.get("window", t.window);
  if (run.cfg.contains("detect_report")) {
    const Json rep = Json::parse(
        run.read_input("detect_report", run.cfg.at("detect_report")));
    const DetectReport r = detect_report_from_json(rep);
    t.eta1 = r.eta1;
    t.eta2 = r.eta2;
    t.n_r = static_cast<int>(r.filter.n_r());
  }
  t.n_r = run.get("n_r", t.n_r);
  t.eta1 = run.get("eta1", t.eta1);
  t.eta2 = run.get("eta2", t.eta2);
  t.fault_floor = run.get("fault_floor", t.fault_floor);
  return t;
}

int cmd_synth_detect(Run& run) {
  const DetectSpec spec = detect_spec(run);
  const DetectReport rep = synthesize_detector(spec);
  run.write_json("detect_report.json", to_json(rep));
  run.write("trace.csv", trace_csv(rep.trace));
  std::printf("status %s  eta1 %.6g  eta2 %.6g  iterations %d\n",
              to_string(rep.status), rep.eta1, rep.eta2, rep.iterations);
  for (const auto& w : rep.warnings) std::printf("warning: %s\n", w.c_str());
  if (rep.ok())
    std::printf("%s\n", rep.message.c_str());
  else
    std::fprintf(stderr, "%s\n", rep.message.c_str());
  return status_exit(rep.status);
}

int cmd_synth_estimate(Run& run) {
  const EstimSpec spec = estim_spec(run);
  const std::string method = run.get<std::string>("method", "exact");
  EstimReport rep;
  if (method == "sampled") {
    rep = synthesize_sampled(spec);
  } else if (method == "closed_form") {
    rep = certify_estimator(
        spec, FilterForm::from_stacked(closed_form(spec), spec.denominator()));
    rep.method = "closed_form";
  } else if (method == "exact") {
    const EstimReport init = synthesize_sampled(spec);
    if (!init.ok()) {
      rep = init;
    } else {
      rep = synthesize_exact(spec, init.filter);
    }
  } else {
    throw Error("synth-estimate: unknown method '" + method +
                "' (sampled|exact|closed_form)");
  }
  run.write_json("estim_report.json", to_json(rep));
  run.write("trace.csv", trace_csv(rep.trace));
  if (rep.ok()) {
    const std::vector<double> theta = spec.bands.grid(64);
    std::ostringstream os;
    write_sample_csv(os, theta,
                     sample_errors(rep.filter, to_dae(spec.plant), theta));
    run.write("errors.csv", os.str());
  }
  std::printf("status %s  eta3 %.6g  gain bound %.6g\n", to_string(rep.status),
              rep.eta3, std::sqrt(std::max(rep.eta3, 0.0)));
  if (!rep.ok()) std::fprintf(stderr, "%s\n", rep.message.c_str());
  return status_exit(rep.status);
}

int cmd_gap(Run& run) {
  const EstimSpec spec = estim_spec(run);
  const GapReport g = suboptimality_gap(spec);
  run.write_json("gap_report.json", to_json(g));
  run.write("trace.csv", trace_csv(g.exact.trace));
  std::printf("lower %.6g  upper %.6g\n", g.lower, g.upper);
  if (!g.lower_ok) return status_exit(g.sampled.status);
  if (!g.upper_ok) return status_exit(g.exact.status);
  return kExitOk;
}

int cmd_threshold(Run& run) {
  const ThresholdSpec t = threshold_spec(run);
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "threshold"},
         {"lambda", t.lambda},
         {"far", t.far},
         {"window", t.window},
         {"n_r", t.n_r},
         {"eta1", t.eta1},
         {"eta2", t.eta2},
         {"threshold", threshold(t)},
         {"chebyshev_threshold", chebyshev_threshold(t)}};
  std::printf("J_th %.6g  (Chebyshev %.6g)\n", threshold(t),
              chebyshev_threshold(t));
  if (t.eta2 > 0.0) {
    j["detectability_floor"] = detectability_floor(t);
    if (t.fault_floor > 0.0) {
      j["fault_floor"] = t.fault_floor;
      j["fdr_bound"] = fdr_bound(t);
      std::printf("detection rate bound %.6g for faults >= %.6g\n",
                  fdr_bound(t), t.fault_floor);
    }
  }
  run.write_json("threshold.json", j);
  return kExitOk;
}

int cmd_simulate(Run& run) {
  const StateSpace plant = load_plant(run);
  const Json rep = Json::parse(
      run.read_input("detect_report", run.need("detect_report")));
  const DetectReport dr = detect_report_from_json(rep);
  ThresholdSpec t = threshold_spec(run);
  const double jth = threshold(t);

  const std::string scen_name = run.get<std::string>("scenario", "");
  const std::uint64_t seed = run.manifest.seed;
  int horizon = run.get("horizon", 300);
  MatrixXd F = MatrixXd::Zero(plant.nf(), horizon);
  MatrixXd D = MatrixXd::Zero(plant.nd(), horizon);
  if (!scen_name.empty()) {
    const Scenario sc = find_scenario(scen_name);
    horizon = run.get("horizon", sc.horizon);
    F = sc.fault_matrix(horizon);
    D = MatrixXd::Zero(plant.nd(), horizon);
    for (std::size_t i = 0; i < sc.disturbances.size(); ++i)
      for (int k = 0; k < horizon; ++k)
        D(static_cast<Index>(i), k) = sc.disturbances[i](k);
    if (sc.disturbance_jitter > 0.0 && plant.nd() > 0)
      D += sub_gaussian_noise(NoiseKind::Uniform, sc.disturbance_jitter,
                              horizon, plant.nd(), seed, 1);
    require(F.rows() == plant.nf() && D.rows() == plant.nd(),
            "simulate: scenario does not match the plant");
  }
  const NoiseKind kind =
      parse_noise_kind(run.get<std::string>("noise", "gaussian"));
  const MatrixXd W =
      sub_gaussian_noise(kind, t.lambda, horizon, plant.nw(), seed, 0);
  const MatrixXd U = MatrixXd::Zero(plant.nu(), horizon);
  const MatrixXd r = simulate_residual(plant, dr.filter, U, D, W, F);
  const ResidualTrace trace = ResidualTrace::evaluate(r, t.window, jth);
  std::ostringstream os;
  trace.write_csv(os);
  run.write("residual.csv", os.str());

  std::ostringstream fo;
  fo << "k";
  for (Index i = 0; i < F.rows(); ++i) fo << ",f" << i;
  fo << "\n";
  char buf[64];
  for (int k = 0; k < horizon; ++k) {
    fo << k;
    for (Index i = 0; i < F.rows(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", F(i, k));
      fo << buf;
    }
    fo << "\n";
  }
  run.write("faults.csv", fo.str());
  std::printf("J_th %.6g  first alarm %d\n", jth, trace.first_alarm());

  const long trials = run.get("trials", 0L);
  if (trials > 0) {
    MonteCarloSpec mc;
    mc.threshold = t;
    mc.noise = kind;
    mc.trials = trials;
    mc.seed = seed;
    mc.threads = run.get("threads", 1);
    FaultSignal fault;
    if (t.fault_floor > 0.0) {
      // Constant fault of magnitude fault_floor on the chosen channel.
      const Index ch = run.get("fault_channel", 0);
      require(ch >= 0 && ch < plant.nf(), "simulate: fault_channel out of range");
      const Index nf = plant.nf();
      const double mag = t.fault_floor;
      fault = [ch, nf, mag](int) {
        VectorXd v = VectorXd::Zero(nf);
        v(ch) = mag;
        return v;
      };
    }
    const RateReport rr = monte_carlo_rates(plant, dr.filter, mc, fault);
    Json j = to_json(rr);
    if (fault) j["fdr_bound"] = fdr_bound(t);
    run.write_json("rates.json", j);
    std::printf("false alarms %ld/%ld  (95%% upper %.3g)\n", rr.far.hits,
                rr.far.trials, rr.far.upper);
    if (fault)
      std::printf("detections %ld/%ld  (95%% lower %.6g, bound %.6g)\n",
                  rr.detection.hits, rr.detection.trials, rr.detection.lower,
                  fdr_bound(t));
  }
  return kExitOk;
}

int cmd_validate(Run& run) {
  const StateSpace plant = load_plant(run);
  const FrequencyBands bands = load_bands(run);
  const Json rep = Json::parse(
      run.read_input("detect_report", run.need("detect_report")));
  const DetectReport dr = detect_report_from_json(rep);
  const DetectValidation v = validate_detector(dr, plant, bands, run.manifest.seed);
  run.write_json("validation.json", to_json(v));
  std::printf("h2 %s (%.6g <= %.6g)  h_minus %s (%.6g >= %.6g)  "
              "decoupling %s (%.3g)  simulation %s (%.3g)\n",
              v.h2_ok ? "ok" : "FAIL", v.h2_sq, dr.eta1,
              v.hminus_ok ? "ok" : "FAIL", v.hminus_sq, dr.eta2,
              v.decoupling_ok ? "ok" : "FAIL", v.decoupling,
              v.simulation_ok ? "ok" : "FAIL", v.simulation);
  return v.pass() ? kExitOk : kExitInfeasible;
}

Json parse_override(const std::string& value) {
  try {
    return Json::parse(value);
  } catch (const Json::parse_error&) {
    return Json(value);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-shaped fault detection and estimation filters"};
  app.require_subcommand(1);

  std::string config, out = "out", plant;
  std::vector<std::string> sets;
  std::optional<double> far, lambda;
  std::optional<int> window;
  std::optional<long> trials;
  std::optional<std::uint64_t> seed;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"synth-detect", "Synthesize a fault detection filter"},
      {"synth-estimate", "Synthesize a fault estimation filter"},
      {"gap", "Lower and upper bounds of the estimation optimum"},
      {"threshold", "Residual threshold and detection-rate bound"},
      {"simulate", "Residual trace of a scenario and Monte-Carlo rates"},
      {"validate", "Check a detection report against its plant"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config, "JSON run configuration");
    sub->add_option("-o,--out", out, "Output directory");
    sub->add_option("--plant", plant, "turbine, power_system or a JSON file");
    sub->add_option("--set", sets, "Override a config field: key=value");
    sub->add_option("--far", far, "Acceptable false-alarm rate");
    sub->add_option("--window", window, "Evaluation window length");
    sub->add_option("--lambda", lambda, "Sub-Gaussian noise parameter");
    sub->add_option("--trials", trials, "Monte-Carlo trials");
    sub->add_option("--seed", seed, "Random seed");
  }
  CLI11_PARSE(app, argc, argv);

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  try {
    if (!config.empty()) {
      const fs::path cp(config);
      if (!fs::exists(cp)) throw Error("config file '" + config + "' does not exist");
      const std::string text = read_file(config);
      run.cfg = Json::parse(text);
      if (!run.cfg.is_object()) throw Error("config must be a JSON object");
      run.config_dir = cp.has_parent_path() ? cp.parent_path() : fs::path(".");
      run.manifest.input_hashes["config"] = hash_hex(fnv1a64(text));
      if (run.cfg.contains("command") &&
          run.cfg.at("command").get<std::string>() != run.command)
        throw Error("config is for command '" +
                    run.cfg.at("command").get<std::string>() + "', not '" +
                    run.command + "'");
    }
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0)
        throw Error("--set expects key=value, got '" + s + "'");
      run.cfg[s.substr(0, eq)] = parse_override(s.substr(eq + 1));
    }
    if (!plant.empty()) run.cfg["plant"] = plant;
    if (far) run.cfg["far"] = *far;
    if (window) run.cfg["window"] = *window;
    if (lambda) run.cfg["lambda"] = *lambda;
    if (trials) run.cfg["trials"] = *trials;
    if (seed) run.cfg["seed"] = *seed;
    if (run.cfg.contains("output") && out == "out")
      out = run.cfg.at("output").get<std::string>();
    run.out_dir = out;
    run.manifest.command = run.command;
    run.manifest.seed = run.get<std::uint64_t>("seed", 1);

    int code = kExitError;
    if (run.command == "synth-detect") code = cmd_synth_detect(run);
    else if (run.command == "synth-estimate") code = cmd_synth_estimate(run);
    else if (run.command == "gap") code = cmd_gap(run);
    else if (run.command == "threshold") code = cmd_threshold(run);
    else if (run.command == "simulate") code = cmd_simulate(run);
    else if (run.command == "validate") code = cmd_validate(run);

    Json m = run.manifest.to_json();
    m["exit_code"] = code;
    m["config"] = run.cfg;
    fs::create_directories(run.out_dir);
    write_file((run.out_dir / "manifest.json").string(), m.dump(2) + "\n");
    return code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
}
