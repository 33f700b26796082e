#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nettomo/topology.hpp"

namespace nettomo {

/// Which monitors are active. The minimal scheme watches every node and no edges.
struct ObservationScheme {
  std::vector<bool> monitor_egress;   // per exterior node
  std::vector<bool> monitor_ingress;  // per exterior node
  std::vector<bool> monitor_flows;    // per interior node
  std::vector<Pair> observed_pairs;   // per-tick counts seen directly

  /// All node monitors on, no directly observed pairs.
  static ObservationScheme nodes_only(const Topology& topology);

  friend bool operator==(const ObservationScheme&, const ObservationScheme&) = default;
};

enum class RowKind { egress, ingress, flow, edge };

struct RowDescriptor {
  RowKind kind = RowKind::egress;
  int node = -1;  // exterior node for egress/ingress, interior node for flow
  Pair pair{};    // only meaningful for edge rows

  friend bool operator==(const RowDescriptor&, const RowDescriptor&) = default;
};

std::string to_string(RowKind kind);
RowKind row_kind_from_string(const std::string& name);

/// Binary linear map from per-pair counts to monitored observables.
///
/// Stored sparsely: each row keeps the sorted list of pair indices with a 1.
class ObservationOperator {
 public:
  ObservationOperator() = default;
  ObservationOperator(std::size_t pair_count, std::vector<RowDescriptor> rows,
                      std::vector<std::vector<std::size_t>> row_pairs);

  std::size_t row_count() const { return rows_.size(); }
  std::size_t pair_count() const { return pair_count_; }
  const std::vector<RowDescriptor>& rows() const { return rows_; }
  std::span<const std::size_t> row_pairs(std::size_t r) const { return row_pairs_.at(r); }
  /// Rows that touch pair p, ascending.
  std::span<const std::size_t> pair_rows(std::size_t p) const { return pair_rows_.at(p); }
  int entry(std::size_t r, std::size_t p) const;
  Eigen::MatrixXd dense() const;

  friend bool operator==(const ObservationOperator&, const ObservationOperator&) = default;

 private:
  std::size_t pair_count_ = 0;
  std::vector<RowDescriptor> rows_;
  std::vector<std::vector<std::size_t>> row_pairs_;
  std::vector<std::vector<std::size_t>> pair_rows_;
};

/// Observation vectors y^t for t = 0..T-1, stored tick-major.
class ObservationSeries {
 public:
  using Value = std::int64_t;

  ObservationSeries() = default;
  ObservationSeries(std::size_t ticks, std::vector<RowDescriptor> rows, std::vector<Value> values);

  std::size_t ticks() const { return ticks_; }
  std::size_t row_count() const { return rows_.size(); }
  const std::vector<RowDescriptor>& rows() const { return rows_; }
  std::span<const Value> tick(std::size_t t) const {
    return std::span<const Value>(values_).subspan(t * rows_.size(), rows_.size());
  }
  std::span<const Value> flat() const { return values_; }
  /// (1/T) sum_t y^t.
  std::vector<double> mean() const;

  friend bool operator==(const ObservationSeries&, const ObservationSeries&) = default;

 private:
  std::size_t ticks_ = 0;
  std::vector<RowDescriptor> rows_;
  std::vector<Value> values_;
};

/// Row order: egress by node, ingress by node, flows by interior node, edges by pair order.
ObservationOperator build_operator(const Topology& topology, const ObservationScheme& scheme);

/// y^t = A vec(N^t) for every tick, integer exact.
ObservationSeries apply_operator(const ObservationOperator& op, const TrafficSeries& traffic);

/// A vec(rates).
std::vector<double> expected_observations(const ObservationOperator& op, const RateMatrix& rates);

}  // namespace nettomo
