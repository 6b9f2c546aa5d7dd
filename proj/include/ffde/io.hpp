#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "ffde/detect.hpp"
#include "ffde/estimate.hpp"
#include "ffde/freqan.hpp"
#include "ffde/runtime.hpp"
#include "ffde/sysmodel.hpp"

namespace ffde {

using Json = nlohmann::json;

/// Version stamped into every report document.
inline constexpr int kSchemaVersion = 1;

const char* library_version();

/// Matrices are arrays of rows; vectors are flat arrays.
Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j, Index cols_if_empty = 0);
Json vector_to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j);

Json to_json(const StateSpace& sys);
/// Missing channels default to zero width; D, Dw, Df default to zeros.
StateSpace state_space_from_json(const Json& j);

Json to_json(const FrequencyBands& bands);
FrequencyBands bands_from_json(const Json& j);

Json to_json(const FilterForm& f);
FilterForm filter_from_json(const Json& j);

Json to_json(const DetectReport& r);
DetectReport detect_report_from_json(const Json& j);
Json to_json(const DetectValidation& v);
Json to_json(const EstimReport& r);
EstimReport estim_report_from_json(const Json& j);
Json to_json(const GapReport& g);
Json to_json(const RateEstimate& e);
Json to_json(const RateReport& r);

SolveStatus parse_status(const std::string& s);

/// 64-bit FNV-1a hash, printed as 16 lowercase hex digits by hash_hex.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hash_hex(std::uint64_t h);

/// Run manifest: command, input hashes, seed, versions and output names.
struct Manifest {
  std::string command;
  std::map<std::string, std::string> input_hashes;  // name -> fnv1a64 hex
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;

  Json to_json() const;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace ffde
