#include "nettomo/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) throw IoError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw IoError(std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("field '") + key + "': " + e.what());
  }
}

// Non-finite doubles are stored as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double to_double(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw IoError("expected a number");
  return j.get<double>();
}

Json numbers(std::span<const double> values) {
  Json out = Json::array();
  for (double v : values) out.push_back(number(v));
  return out;
}

std::vector<double> doubles(const Json& j) {
  if (!j.is_array()) throw IoError("expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(to_double(v));
  return out;
}

template <class T>
std::vector<T> flatten_rows(const Json& j, std::size_t rows, std::size_t width, const char* what) {
  if (!j.is_array() || j.size() != rows) throw IoError(std::string(what) + ": wrong number of ticks");
  std::vector<T> out;
  out.reserve(rows * width);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != width) throw IoError(std::string(what) + ": ragged tick row");
    for (const auto& v : row) {
      if (!v.is_number_integer()) throw IoError(std::string(what) + ": expected integers");
      out.push_back(v.get<T>());
    }
  }
  return out;
}

std::vector<bool> bools(const Json& j, const char* key) {
  auto raw = field(j, key);
  if (!raw.is_array()) throw IoError(std::string("field '") + key + "' must be an array of booleans");
  std::vector<bool> out;
  for (const auto& v : raw) {
    if (!v.is_boolean()) throw IoError(std::string("field '") + key + "' must be an array of booleans");
    out.push_back(v.get<bool>());
  }
  return out;
}

}  // namespace

Json to_json(const Pair& pair) { return Json::array({pair.src, pair.dst}); }

Pair pair_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw IoError("a pair must be a [src, dst] array of integers");
  return {j[0].get<int>(), j[1].get<int>()};
}

Json to_json(const Topology& topology) {
  Json pairs = Json::array();
  for (const auto& p : topology.pairs()) pairs.push_back(to_json(p));
  return Json{{"n_exterior", topology.n_exterior()},
              {"n_interior", topology.n_interior()},
              {"pairs", pairs},
              {"routes", topology.routes()}};
}

Topology topology_from_json(const Json& j) {
  std::vector<Pair> pairs;
  for (const auto& p : field(j, "pairs")) pairs.push_back(pair_from_json(p));
  auto routes = j.contains("routes") ? get<std::vector<std::vector<int>>>(j, "routes") : std::vector<std::vector<int>>{};
  return Topology(get<int>(j, "n_exterior"), get<int>(j, "n_interior"), std::move(pairs), std::move(routes));
}

Json to_json(const ObservationScheme& scheme) {
  Json observed = Json::array();
  for (const auto& p : scheme.observed_pairs) observed.push_back(to_json(p));
  return Json{{"egress", scheme.monitor_egress},
              {"ingress", scheme.monitor_ingress},
              {"flows", scheme.monitor_flows},
              {"observed_pairs", observed}};
}

ObservationScheme scheme_from_json(const Json& j) {
  ObservationScheme scheme;
  scheme.monitor_egress = bools(j, "egress");
  scheme.monitor_ingress = bools(j, "ingress");
  scheme.monitor_flows = bools(j, "flows");
  for (const auto& p : field(j, "observed_pairs")) scheme.observed_pairs.push_back(pair_from_json(p));
  return scheme;
}

Json to_json(const RateMatrix& rates) { return numbers(rates.values()); }

RateMatrix rates_from_json(const Json& j) { return RateMatrix(doubles(j)); }

Json to_json(const GroundTruth& truth) {
  Json labels = Json::array();
  for (auto l : truth.labels) labels.push_back(to_string(l));
  return Json{{"topology", to_json(truth.topology)},
              {"baseline", to_json(truth.baseline)},
              {"truth", to_json(truth.truth)},
              {"labels", labels}};
}

GroundTruth ground_truth_from_json(const Json& j) {
  GroundTruth truth;
  truth.topology = topology_from_json(field(j, "topology"));
  truth.baseline = rates_from_json(field(j, "baseline"));
  truth.truth = rates_from_json(field(j, "truth"));
  for (const auto& l : field(j, "labels")) {
    if (!l.is_string()) throw IoError("diversion labels must be strings");
    truth.labels.push_back(diversion_label_from_string(l.get<std::string>()));
  }
  const std::size_t n = truth.topology.pair_count();
  if (truth.baseline.size() != n || truth.truth.size() != n || truth.labels.size() != n)
    throw IoError("ground truth vectors do not match the topology's pair count");
  return truth;
}

Json to_json(const TrafficSeries& traffic) {
  Json counts = Json::array();
  for (std::size_t t = 0; t < traffic.ticks(); ++t) {
    auto row = traffic.tick(t);
    counts.push_back(Json(std::vector<TrafficSeries::Count>(row.begin(), row.end())));
  }
  return Json{{"ticks", traffic.ticks()}, {"pair_count", traffic.pair_count()}, {"counts", counts}};
}

TrafficSeries traffic_from_json(const Json& j) {
  const auto ticks = get<std::size_t>(j, "ticks");
  const auto pairs = get<std::size_t>(j, "pair_count");
  return TrafficSeries(ticks, pairs, flatten_rows<TrafficSeries::Count>(field(j, "counts"), ticks, pairs, "counts"));
}

Json to_json(const RowDescriptor& row) {
  Json out{{"kind", to_string(row.kind)}};
  if (row.kind == RowKind::edge)
    out["pair"] = to_json(row.pair);
  else
    out["node"] = row.node;
  return out;
}

RowDescriptor row_from_json(const Json& j) {
  RowDescriptor row;
  try {
    row.kind = row_kind_from_string(get<std::string>(j, "kind"));
  } catch (const ConfigError& e) {
    throw IoError(e.what());
  }
  if (row.kind == RowKind::edge)
    row.pair = pair_from_json(field(j, "pair"));
  else
    row.node = get<int>(j, "node");
  return row;
}

Json to_json(const ObservationBundle& bundle) {
  Json rows = Json::array();
  for (const auto& r : bundle.observations.rows()) rows.push_back(to_json(r));
  Json values = Json::array();
  for (std::size_t t = 0; t < bundle.observations.ticks(); ++t) {
    auto row = bundle.observations.tick(t);
    values.push_back(Json(std::vector<ObservationSeries::Value>(row.begin(), row.end())));
  }
  Json out;
  if (bundle.seed) out["seed"] = *bundle.seed;
  out["topology"] = to_json(bundle.topology);
  out["scheme"] = to_json(bundle.scheme);
  out["baseline"] = to_json(bundle.baseline);
  out["ticks"] = bundle.observations.ticks();
  out["rows"] = rows;
  out["values"] = values;
  return out;
}

ObservationBundle observation_bundle_from_json(const Json& j) {
  ObservationBundle bundle;
  if (j.contains("seed")) bundle.seed = get<std::uint64_t>(j, "seed");
  bundle.topology = topology_from_json(field(j, "topology"));
  bundle.scheme = scheme_from_json(field(j, "scheme"));
  bundle.baseline = rates_from_json(field(j, "baseline"));
  if (bundle.baseline.size() != bundle.topology.pair_count())
    throw IoError("baseline does not match the topology's pair count");
  std::vector<RowDescriptor> rows;
  for (const auto& r : field(j, "rows")) rows.push_back(row_from_json(r));
  if (rows != build_operator(bundle.topology, bundle.scheme).rows())
    throw IoError("observation rows do not match the topology and scheme");
  const auto ticks = get<std::size_t>(j, "ticks");
  auto values = flatten_rows<ObservationSeries::Value>(field(j, "values"), ticks, rows.size(), "values");
  bundle.observations = ObservationSeries(ticks, std::move(rows), std::move(values));
  return bundle;
}

Json to_json(const EstimateReport& report) {
  Json out;
  out["estimator"] = to_string(report.estimator);
  out["lambda_hat"] = to_json(report.lambda_hat);
  out["epsilon_hat"] = numbers(report.epsilon_hat);
  out["iterations"] = report.iterations;
  out["lp_iterations"] = report.lp_iterations;
  out["converged"] = report.converged;
  out["objective_kind"] = report.objective_kind;
  out["objective_trace"] = numbers(report.objective_trace);
  out["restart"] = report.restart;
  out["restart_iterations"] = report.restart_iterations;
  out["restart_objectives"] = numbers(report.restart_objectives);
  out["estep_nonconverged"] = report.estep_nonconverged;
  out["lp_objective"] = number(report.lp_objective);
  return out;
}

EstimateReport estimate_report_from_json(const Json& j) {
  EstimateReport report;
  try {
    report.estimator = estimator_tag_from_string(get<std::string>(j, "estimator"));
  } catch (const ConfigError& e) {
    throw IoError(e.what());
  }
  report.lambda_hat = rates_from_json(field(j, "lambda_hat"));
  report.epsilon_hat = doubles(field(j, "epsilon_hat"));
  report.iterations = get<int>(j, "iterations");
  report.lp_iterations = get<int>(j, "lp_iterations");
  report.converged = get<bool>(j, "converged");
  report.objective_kind = get<std::string>(j, "objective_kind");
  report.objective_trace = doubles(field(j, "objective_trace"));
  report.restart = get<int>(j, "restart");
  report.restart_iterations = get<std::vector<int>>(j, "restart_iterations");
  report.restart_objectives = doubles(field(j, "restart_objectives"));
  report.estep_nonconverged = get<long>(j, "estep_nonconverged");
  report.lp_objective = to_double(field(j, "lp_objective"));
  return report;
}

Json to_json(const DetectionResult& result) {
  Json edges = Json::array();
  for (const auto& e : result.per_edge) edges.push_back(Json{{"label", to_string(e.label)}, {"change", number(e.change)}});
  return Json{{"statistic", number(result.statistic)},
              {"threshold", number(result.threshold)},
              {"decision", result.decision},
              {"per_edge", edges}};
}

DetectionResult detection_from_json(const Json& j) {
  DetectionResult result;
  result.statistic = to_double(field(j, "statistic"));
  result.threshold = to_double(field(j, "threshold"));
  result.decision = get<bool>(j, "decision");
  for (const auto& e : field(j, "per_edge")) {
    EdgeFinding finding;
    try {
      finding.label = edge_label_from_string(get<std::string>(e, "label"));
    } catch (const ConfigError& err) {
      throw IoError(err.what());
    }
    finding.change = to_double(field(e, "change"));
    result.per_edge.push_back(finding);
  }
  return result;
}

Json to_json(const RocCurve& curve) {
  Json points = Json::array();
  for (const auto& p : curve.points)
    points.push_back(Json{{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", number(p.threshold)}});
  return Json{{"auc", curve.auc}, {"points", points}};
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_field(fields[i]);
  }
  return out + "\r\n";
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = csv_row({"fpr", "tpr", "threshold"});
  for (const auto& p : curve.points)
    out += csv_row({format_number(p.fpr), format_number(p.tpr), format_number(p.threshold)});
  return out;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string dump_json(const Json& doc) { return doc.dump(2) + "\n"; }

void write_json_file(const std::filesystem::path& path, const Json& doc) { write_text_file(path, dump_json(doc)); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace nettomo
