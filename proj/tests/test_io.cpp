#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "ffde/bench.hpp"
#include "ffde/io.hpp"
#include "ffde/runtime.hpp"
#include "oracles.hpp"

using namespace ffde;

namespace {

Json reparse(const Json& j) { return Json::parse(j.dump()); }

}  // namespace

TEST(Fnv1a, ReferenceVectors) {
  EXPECT_EQ(hash_hex(fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(hash_hex(fnv1a64("a")), "af63dc4c8601ec8c");
  EXPECT_EQ(hash_hex(fnv1a64("foobar")), "85944171f73967e8");
  EXPECT_EQ(hash_hex(0), "0000000000000000");
}

TEST(JsonIo, MatrixRoundTripIsExact) {
  oracle::Gen g(81);
  const MatrixXd m = g.matrix(3, 4, 1e3);
  EXPECT_EQ(matrix_from_json(reparse(matrix_to_json(m))), m);
  const MatrixXd empty = matrix_from_json(Json::array(), 5);
  EXPECT_EQ(empty.rows(), 0);
  EXPECT_EQ(empty.cols(), 5);
  EXPECT_THROW(matrix_from_json(Json::parse("[[1,2],[3]]")), Error);
  EXPECT_THROW(matrix_from_json(Json::parse("{\"a\":1}")), Error);
  const VectorXd v = g.matrix(6, 1);
  EXPECT_EQ(vector_from_json(reparse(vector_to_json(v))), v);
}

TEST(JsonIo, PlantRoundTrip) {
  for (const StateSpace& s : {turbine_model(), power_system_model()}) {
    const StateSpace t = state_space_from_json(reparse(to_json(s)));
    EXPECT_EQ(t.A, s.A);
    EXPECT_EQ(t.B, s.B);
    EXPECT_EQ(t.Bd, s.Bd);
    EXPECT_EQ(t.Bw, s.Bw);
    EXPECT_EQ(t.Bf, s.Bf);
    EXPECT_EQ(t.C, s.C);
    EXPECT_EQ(t.D, s.D);
    EXPECT_EQ(t.Dw, s.Dw);
    EXPECT_EQ(t.Df, s.Df);
    EXPECT_EQ(t.sample_period, s.sample_period);
  }
}

TEST(JsonIo, PlantMissingChannelsDefaultToZero) {
  const StateSpace s = state_space_from_json(Json::parse(
      R"({"A": [[0.5]], "C": [[1.0]], "Bf": [[1.0]], "nw": 2})"));
  EXPECT_EQ(s.nu(), 0);
  EXPECT_EQ(s.nf(), 1);
  EXPECT_EQ(s.nw(), 2);
  EXPECT_TRUE(s.Bw.isZero(0));
  EXPECT_EQ(s.Df.rows(), 1);
  EXPECT_THROW(state_space_from_json(Json::parse(R"({"A": [[0.5]]})")), Error);
  EXPECT_THROW(state_space_from_json(Json::parse(R"({"A": [[0.5]], "C": [[1.0, 2.0]]})")),
               Error);
}

TEST(JsonIo, BundledDataMatchesBuiltInModels) {
  const std::filesystem::path dir(FFDE_DATA_DIR);
  const StateSpace t =
      state_space_from_json(Json::parse(read_file((dir / "turbine.json").string())));
  EXPECT_LT((t.A - turbine_model().A).norm(), 1e-12);
  EXPECT_LT((t.Bf - turbine_model().Bf).norm(), 1e-12);
  const StateSpace p = state_space_from_json(
      Json::parse(read_file((dir / "power_system.json").string())));
  const StateSpace q = power_system_model();
  EXPECT_LT((p.A - q.A).norm(), 1e-12);
  EXPECT_LT((p.Bd - q.Bd).norm(), 1e-12);
  EXPECT_LT((p.Bf - q.Bf).norm(), 1e-12);
  EXPECT_LT((p.Dw - q.Dw).norm(), 1e-12);
}

TEST(JsonIo, BandsAndFilterRoundTrip) {
  const FrequencyBands b({{0.1, 0.2}, {-0.5, -0.3}});
  const FrequencyBands c = bands_from_json(reparse(to_json(b)));
  EXPECT_EQ(c.bands(), b.bands());
  EXPECT_THROW(bands_from_json(Json::parse("[[0.1]]")), Error);

  oracle::Gen g(82);
  FilterForm f;
  f.a = g.stable_denominator(3, 0.5);
  for (int i = 0; i < 3; ++i) f.N.push_back(g.matrix(2, 5));
  const FilterForm h = filter_from_json(reparse(to_json(f)));
  EXPECT_EQ(h.a, f.a);
  ASSERT_EQ(h.N.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(h.N[i], f.N[i]);
  EXPECT_THROW(filter_from_json(Json::parse(R"({"a": [0.1], "N": []})")), Error);
  EXPECT_THROW(filter_from_json(Json::parse(R"({"a": [0.1], "N": [[[1]], [[1, 2]]]})")),
               Error);
}

TEST(JsonIo, ReportsRoundTrip) {
  DetectReport d;
  d.status = SolveStatus::Optimal;
  d.eta1 = 1.25;
  d.eta2 = 0.001;
  d.trace = {0.5, 0.25};
  d.iterations = 2;
  d.converged = true;
  d.warnings = {"w"};
  d.filter.a = VectorXd::Constant(1, 0.1);
  d.filter.N = {MatrixXd::Ones(1, 2), MatrixXd::Zero(1, 2)};
  const Json dj = reparse(to_json(d));
  EXPECT_EQ(dj.at("schema_version"), kSchemaVersion);
  const DetectReport d2 = detect_report_from_json(dj);
  EXPECT_EQ(d2.eta1, d.eta1);
  EXPECT_EQ(d2.eta2, d.eta2);
  EXPECT_EQ(d2.trace, d.trace);
  EXPECT_TRUE(d2.converged);
  EXPECT_EQ(d2.warnings, d.warnings);
  EXPECT_EQ(d2.filter.N[0], d.filter.N[0]);

  EstimReport e;
  e.method = "sampled";
  e.status = SolveStatus::MaxIter;
  e.eta3 = 0.04;
  e.samples = {0.1, 0.2};
  e.filter = d.filter;
  const EstimReport e2 = estim_report_from_json(reparse(to_json(e)));
  EXPECT_EQ(e2.method, "sampled");
  EXPECT_EQ(e2.status, SolveStatus::MaxIter);
  EXPECT_EQ(e2.eta3, 0.04);
  EXPECT_EQ(e2.samples, e.samples);
  EXPECT_THROW(parse_status("solved"), Error);
}

TEST(JsonIo, RateReportOmitsDetectionWithoutFault) {
  RateReport r;
  r.far = wilson_interval(0, 100);
  EXPECT_FALSE(to_json(r).contains("detection"));
  r.has_fault = true;
  r.detection = wilson_interval(100, 100);
  EXPECT_EQ(to_json(r).at("detection").at("hits"), 100);
}

TEST(Manifest, CarriesVersionsAndHashes) {
  Manifest m;
  m.command = "gap";
  m.input_hashes["config"] = hash_hex(fnv1a64("{}"));
  m.seed = 7;
  m.outputs = {"gap_report.json"};
  const Json j = m.to_json();
  EXPECT_EQ(j.at("versions").at("ffde"), library_version());
  EXPECT_EQ(j.at("inputs").at("config").get<std::string>().size(), 16u);
  EXPECT_EQ(j.at("seed"), 7);
}

TEST(Files, WriteThenRead) {
  const auto path = std::filesystem::temp_directory_path() / "ffde_io_test.txt";
  write_file(path.string(), std::string("line\n\0binary", 12));
  EXPECT_EQ(read_file(path.string()), std::string("line\n\0binary", 12));
  std::filesystem::remove(path);
  EXPECT_THROW(read_file(path.string()), Error);
}
