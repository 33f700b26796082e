#include "nettomo/observation.hpp"

#include <algorithm>

#include "nettomo/error.hpp"

namespace nettomo {

ObservationScheme ObservationScheme::nodes_only(const Topology& topology) {
  ObservationScheme scheme;
  scheme.monitor_egress.assign(topology.n_exterior(), true);
  scheme.monitor_ingress.assign(topology.n_exterior(), true);
  scheme.monitor_flows.assign(topology.n_interior(), true);
  return scheme;
}

std::string to_string(RowKind kind) {
  switch (kind) {
    case RowKind::egress: return "egress";
    case RowKind::ingress: return "ingress";
    case RowKind::flow: return "flow";
    case RowKind::edge: return "edge";
  }
  return "unknown";
}

RowKind row_kind_from_string(const std::string& name) {
  if (name == "egress") return RowKind::egress;
  if (name == "ingress") return RowKind::ingress;
  if (name == "flow") return RowKind::flow;
  if (name == "edge") return RowKind::edge;
  throw ConfigError("unknown observation row kind '" + name + "'");
}

ObservationOperator::ObservationOperator(std::size_t pair_count, std::vector<RowDescriptor> rows,
                                         std::vector<std::vector<std::size_t>> row_pairs)
    : pair_count_(pair_count), rows_(std::move(rows)), row_pairs_(std::move(row_pairs)), pair_rows_(pair_count) {
  if (rows_.size() != row_pairs_.size()) throw ContractError("row descriptors and row supports differ in length");
  for (std::size_t r = 0; r < row_pairs_.size(); ++r) {
    auto& support = row_pairs_[r];
    std::sort(support.begin(), support.end());
    if (std::adjacent_find(support.begin(), support.end()) != support.end())
      throw ContractError("operator row lists a pair twice");
    for (std::size_t p : support) {
      if (p >= pair_count_) throw ContractError("operator row references an unknown pair");
      pair_rows_[p].push_back(r);
    }
  }
}

int ObservationOperator::entry(std::size_t r, std::size_t p) const {
  const auto& support = row_pairs_.at(r);
  return std::binary_search(support.begin(), support.end(), p) ? 1 : 0;
}

Eigen::MatrixXd ObservationOperator::dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows_.size()),
                                            static_cast<Eigen::Index>(pair_count_));
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (std::size_t p : row_pairs_[r]) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = 1.0;
  return a;
}

ObservationSeries::ObservationSeries(std::size_t ticks, std::vector<RowDescriptor> rows, std::vector<Value> values)
    : ticks_(ticks), rows_(std::move(rows)), values_(std::move(values)) {
  if (values_.size() != ticks_ * rows_.size()) throw ContractError("observation array has the wrong length");
  if (std::any_of(values_.begin(), values_.end(), [](Value v) { return v < 0; }))
    throw ContractError("observations must be nonnegative");
}

std::vector<double> ObservationSeries::mean() const {
  std::vector<double> out(rows_.size(), 0.0);
  if (ticks_ == 0) return out;
  for (std::size_t t = 0; t < ticks_; ++t) {
    auto y = tick(t);
    for (std::size_t r = 0; r < y.size(); ++r) out[r] += static_cast<double>(y[r]);
  }
  for (double& v : out) v /= static_cast<double>(ticks_);
  return out;
}

ObservationOperator build_operator(const Topology& topology, const ObservationScheme& scheme) {
  const auto n_ext = static_cast<std::size_t>(topology.n_exterior());
  const auto n_int = static_cast<std::size_t>(topology.n_interior());
  if (scheme.monitor_egress.size() != n_ext || scheme.monitor_ingress.size() != n_ext)
    throw ConfigError("scheme egress/ingress monitors must have one entry per exterior node (" +
                      std::to_string(n_ext) + ")");
  if (scheme.monitor_flows.size() != n_int)
    throw ConfigError("scheme flow monitors must have one entry per interior node (" + std::to_string(n_int) + ")");

  std::vector<std::size_t> observed;
  observed.reserve(scheme.observed_pairs.size());
  for (const Pair& pair : scheme.observed_pairs) {
    auto index = topology.index_of(pair);
    if (!index)
      throw ConfigError("observed pair (" + std::to_string(pair.src) + "," + std::to_string(pair.dst) +
                        ") is not in the topology");
    observed.push_back(*index);
  }
  std::sort(observed.begin(), observed.end());
  if (std::adjacent_find(observed.begin(), observed.end()) != observed.end())
    throw ConfigError("observed pairs contain a duplicate");

  std::vector<RowDescriptor> rows;
  std::vector<std::vector<std::size_t>> supports;
  const auto pairs = topology.pairs();

  for (std::size_t i = 0; i < n_ext; ++i) {
    if (!scheme.monitor_egress[i]) continue;
    std::vector<std::size_t> support;
    for (std::size_t p = 0; p < pairs.size(); ++p)
      if (pairs[p].src == static_cast<int>(i)) support.push_back(p);
    rows.push_back({RowKind::egress, static_cast<int>(i), {}});
    supports.push_back(std::move(support));
  }
  for (std::size_t j = 0; j < n_ext; ++j) {
    if (!scheme.monitor_ingress[j]) continue;
    std::vector<std::size_t> support;
    for (std::size_t p = 0; p < pairs.size(); ++p)
      if (pairs[p].dst == static_cast<int>(j)) support.push_back(p);
    rows.push_back({RowKind::ingress, static_cast<int>(j), {}});
    supports.push_back(std::move(support));
  }
  for (std::size_t u = 0; u < n_int; ++u) {
    if (!scheme.monitor_flows[u]) continue;
    std::vector<std::size_t> support;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto route = topology.route(p);
      if (std::find(route.begin(), route.end(), static_cast<int>(u)) != route.end()) support.push_back(p);
    }
    rows.push_back({RowKind::flow, static_cast<int>(u), {}});
    supports.push_back(std::move(support));
  }
  for (std::size_t p : observed) {
    rows.push_back({RowKind::edge, -1, pairs[p]});
    supports.push_back({p});
  }
  return ObservationOperator(pairs.size(), std::move(rows), std::move(supports));
}

ObservationSeries apply_operator(const ObservationOperator& op, const TrafficSeries& traffic) {
  if (traffic.pair_count() != op.pair_count())
    throw ContractError("traffic has " + std::to_string(traffic.pair_count()) + " pairs, operator expects " +
                        std::to_string(op.pair_count()));
  const std::size_t rows = op.row_count();
  std::vector<ObservationSeries::Value> values(traffic.ticks() * rows, 0);
  for (std::size_t t = 0; t < traffic.ticks(); ++t) {
    auto counts = traffic.tick(t);
    for (std::size_t r = 0; r < rows; ++r) {
      ObservationSeries::Value sum = 0;
      for (std::size_t p : op.row_pairs(r)) sum += counts[p];
      values[t * rows + r] = sum;
    }
  }
  return ObservationSeries(traffic.ticks(), op.rows(), std::move(values));
}

std::vector<double> expected_observations(const ObservationOperator& op, const RateMatrix& rates) {
  if (rates.size() != op.pair_count()) throw ContractError("rate matrix does not match operator columns");
  std::vector<double> out(op.row_count(), 0.0);
  for (std::size_t r = 0; r < op.row_count(); ++r)
    for (std::size_t p : op.row_pairs(r)) out[r] += rates[p];
  return out;
}

}  // namespace nettomo
