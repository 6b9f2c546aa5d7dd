#include "ffde/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ffde {

const char* library_version() { return "0.1.0"; }

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j, Index cols_if_empty) {
  require(j.is_array(), "matrix must be an array of rows");
  if (j.empty()) return MatrixXd::Zero(0, cols_if_empty);
  const Index rows = static_cast<Index>(j.size());
  require(j[0].is_array(), "matrix rows must be arrays");
  const Index cols = static_cast<Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    require(j[i].is_array() && static_cast<Index>(j[i].size()) == cols,
            "matrix rows must have equal length");
    for (Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Json vector_to_json(const VectorXd& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from_json(const Json& j) {
  require(j.is_array(), "vector must be an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Json to_json(const StateSpace& s) {
  return Json{{"A", matrix_to_json(s.A)},   {"B", matrix_to_json(s.B)},
              {"Bd", matrix_to_json(s.Bd)}, {"Bw", matrix_to_json(s.Bw)},
              {"Bf", matrix_to_json(s.Bf)}, {"C", matrix_to_json(s.C)},
              {"D", matrix_to_json(s.D)},   {"Dw", matrix_to_json(s.Dw)},
              {"Df", matrix_to_json(s.Df)}, {"nu", s.nu()},
              {"nd", s.nd()},               {"nw", s.nw()},
              {"nf", s.nf()},               {"sample_period", s.sample_period}};
}

StateSpace state_space_from_json(const Json& j) {
  require(j.is_object(), "plant must be a JSON object");
  require(j.contains("A") && j.contains("C"), "plant needs at least A and C");
  const MatrixXd A = matrix_from_json(j.at("A"));
  const MatrixXd C = matrix_from_json(j.at("C"), A.rows());
  const Index nx = A.rows(), ny = C.rows();
  auto width = [&](const char* key, const char* mat) -> Index {
    if (j.contains(key)) return j.at(key).get<Index>();
    if (j.contains(mat) && !j.at(mat).empty()) return j.at(mat)[0].size();
    return 0;
  };
  const Index nu = width("nu", "B"), nd = width("nd", "Bd"),
              nw = width("nw", "Bw"), nf = width("nf", "Bf");
  StateSpace s = StateSpace::zeros(nx, nu, nd, nw, nf, ny);
  s.A = A;
  s.C = C;
  auto load = [&](const char* key, MatrixXd& m) {
    if (!j.contains(key)) return;
    const Json& v = j.at(key);
    if (v.empty()) return;  // keeps the zero-width / zero-filled default
    m = matrix_from_json(v, m.cols());
  };
  load("B", s.B);
  load("Bd", s.Bd);
  load("Bw", s.Bw);
  load("Bf", s.Bf);
  load("D", s.D);
  load("Dw", s.Dw);
  load("Df", s.Df);
  if (j.contains("sample_period")) s.sample_period = j.at("sample_period");
  s.validate();
  return s;
}

Json to_json(const FrequencyBands& bands) {
  Json a = Json::array();
  for (const auto& [lo, hi] : bands.bands()) a.push_back(Json::array({lo, hi}));
  return a;
}

FrequencyBands bands_from_json(const Json& j) {
  require(j.is_array(), "bands must be an array of [lo, hi] pairs");
  std::vector<std::pair<double, double>> b;
  for (const auto& e : j) {
    require(e.is_array() && e.size() == 2, "each band must be [lo, hi]");
    b.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return FrequencyBands(std::move(b));
}

Json to_json(const FilterForm& f) {
  Json N = Json::array();
  for (const auto& Ni : f.N) N.push_back(matrix_to_json(Ni));
  return Json{{"a", vector_to_json(f.a)}, {"N", N}};
}

FilterForm filter_from_json(const Json& j) {
  require(j.is_object() && j.contains("a") && j.contains("N"),
          "filter needs fields a and N");
  FilterForm f;
  f.a = vector_from_json(j.at("a"));
  for (const auto& Ni : j.at("N")) f.N.push_back(matrix_from_json(Ni));
  require(!f.N.empty(), "filter numerator is empty");
  for (const auto& Ni : f.N)
    require(Ni.rows() == f.N[0].rows() && Ni.cols() == f.N[0].cols(),
            "filter numerator coefficients differ in shape");
  return f;
}

SolveStatus parse_status(const std::string& s) {
  for (auto st : {SolveStatus::Optimal, SolveStatus::Infeasible,
                  SolveStatus::NumericalFailure, SolveStatus::MaxIter})
    if (s == to_string(st)) return st;
  throw Error("unknown solve status '" + s + "'");
}

Json to_json(const DetectReport& r) {
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "detect_report"},
              {"status", to_string(r.status)},
              {"eta1", r.eta1},
              {"eta2", r.eta2},
              {"trace", r.trace},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"message", r.message},
              {"warnings", r.warnings},
              {"filter", to_json(r.filter)}};
}

DetectReport detect_report_from_json(const Json& j) {
  DetectReport r;
  r.status = parse_status(j.at("status").get<std::string>());
  r.eta1 = j.at("eta1");
  r.eta2 = j.at("eta2");
  r.trace = j.value("trace", std::vector<double>{});
  r.iterations = j.value("iterations", 0);
  r.converged = j.value("converged", false);
  r.message = j.value("message", std::string{});
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.filter = filter_from_json(j.at("filter"));
  return r;
}

Json to_json(const DetectValidation& v) {
  return Json{{"pass", v.pass()},
              {"h2_ok", v.h2_ok},
              {"hminus_ok", v.hminus_ok},
              {"decoupling_ok", v.decoupling_ok},
              {"simulation_ok", v.simulation_ok},
              {"h2_sq", v.h2_sq},
              {"hminus_sq", v.hminus_sq},
              {"decoupling", v.decoupling},
              {"simulation", v.simulation}};
}

Json to_json(const EstimReport& r) {
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "estim_report"},
              {"method", r.method},
              {"status", to_string(r.status)},
              {"eta1", r.eta1},
              {"eta3", r.eta3},
              {"samples", r.samples},
              {"trace", r.trace},
              {"iterations", r.iterations},
              {"message", r.message},
              {"filter", to_json(r.filter)}};
}

EstimReport estim_report_from_json(const Json& j) {
  EstimReport r;
  r.method = j.value("method", std::string{});
  r.status = parse_status(j.at("status").get<std::string>());
  r.eta1 = j.at("eta1");
  r.eta3 = j.at("eta3");
  r.samples = j.value("samples", std::vector<double>{});
  r.trace = j.value("trace", std::vector<double>{});
  r.iterations = j.value("iterations", 0);
  r.message = j.value("message", std::string{});
  r.filter = filter_from_json(j.at("filter"));
  return r;
}

Json to_json(const GapReport& g) {
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "gap_report"},
              {"lower", g.lower},
              {"upper", g.upper},
              {"lower_ok", g.lower_ok},
              {"upper_ok", g.upper_ok},
              {"sampled", to_json(g.sampled)},
              {"exact", to_json(g.exact)}};
}

Json to_json(const RateEstimate& e) {
  return Json{{"hits", e.hits},   {"trials", e.trials}, {"rate", e.rate},
              {"lower", e.lower}, {"upper", e.upper}};
}

Json to_json(const RateReport& r) {
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "rate_report"},
         {"threshold", r.threshold},
         {"burn_in", r.burn_in},
         {"seed", r.seed},
         {"far", to_json(r.far)}};
  if (r.has_fault) j["detection"] = to_json(r.detection);
  return j;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json Manifest::to_json() const {
  return Json{{"schema_version", kSchemaVersion},
              {"command", command},
              {"inputs", input_hashes},
              {"seed", seed},
              {"outputs", outputs},
              {"versions",
               {{"ffde", library_version()},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)}}}};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write '" + path + "'");
  out << contents;
  require(static_cast<bool>(out), "write failed for '" + path + "'");
}

}  // namespace ffde
