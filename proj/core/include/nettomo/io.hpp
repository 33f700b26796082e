#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nettomo/detect.hpp"
#include "nettomo/estimators.hpp"
#include "nettomo/observation.hpp"
#include "nettomo/simgen.hpp"
#include "nettomo/topology.hpp"

namespace nettomo {

using Json = nlohmann::ordered_json;

// Document schemas. Pairs are [src, dst] arrays in lexicographic order, rate
// vectors follow the same order, and per-tick data is an array of arrays.
// Decoding failures (missing fields, wrong types) raise IoError.

Json to_json(const Pair& pair);
Json to_json(const Topology& topology);
Json to_json(const ObservationScheme& scheme);
Json to_json(const RateMatrix& rates);
Json to_json(const GroundTruth& truth);
Json to_json(const TrafficSeries& traffic);
Json to_json(const RowDescriptor& row);
Json to_json(const EstimateReport& report);
Json to_json(const DetectionResult& result);
Json to_json(const RocCurve& curve);

Pair pair_from_json(const Json& j);
Topology topology_from_json(const Json& j);
ObservationScheme scheme_from_json(const Json& j);
RateMatrix rates_from_json(const Json& j);
GroundTruth ground_truth_from_json(const Json& j);
TrafficSeries traffic_from_json(const Json& j);
RowDescriptor row_from_json(const Json& j);
EstimateReport estimate_report_from_json(const Json& j);
DetectionResult detection_from_json(const Json& j);

/// Everything an estimator needs from a monitored network, in one file.
struct ObservationBundle {
  Topology topology;
  ObservationScheme scheme;
  RateMatrix baseline;
  ObservationSeries observations;
  std::optional<std::uint64_t> seed;

  friend bool operator==(const ObservationBundle&, const ObservationBundle&) = default;
};

Json to_json(const ObservationBundle& bundle);
/// Also checks that the stored rows match build_operator(topology, scheme).
ObservationBundle observation_bundle_from_json(const Json& j);

/// "fpr,tpr,threshold" with a header row.
std::string roc_csv(const RocCurve& curve);

/// Shortest round-trip decimal form of a double.
std::string format_number(double value);
/// RFC-4180 field quoting (only when needed).
std::string csv_field(const std::string& text);
std::string csv_row(const std::vector<std::string>& fields);

Json read_json_file(const std::filesystem::path& path);
/// Two-space indented, trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string dump_json(const Json& doc);

}  // namespace nettomo
