#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace nettomo {

/// Directed source-destination pair over exterior nodes (0-based indices).
struct Pair {
  int src = 0;
  int dst = 0;

  friend auto operator<=>(const Pair&, const Pair&) = default;
};

/// Exterior/interior node sets, the SD-pair universe, and static routes.
///
/// Pairs are kept in lexicographic (src, dst) order; every vectorization of
/// rates or counts in the library uses that order. A pair missing from the
/// list has a structurally zero rate.
class Topology {
 public:
  Topology() = default;

  /// Throws ConfigError if pairs are unsorted, duplicated, self-loops, or
  /// out of range, or if a route references an unknown interior node.
  /// An empty `routes` means every pair routes directly.
  Topology(int n_exterior, int n_interior, std::vector<Pair> pairs,
           std::vector<std::vector<int>> routes = {});

  /// Every ordered pair (i, j), i != j, with direct routes.
  static Topology complete(int n_exterior, int n_interior = 0);

  int n_exterior() const { return n_exterior_; }
  int n_interior() const { return n_interior_; }
  std::size_t pair_count() const { return pairs_.size(); }
  std::span<const Pair> pairs() const { return pairs_; }
  const Pair& pair(std::size_t p) const { return pairs_.at(p); }
  std::span<const int> route(std::size_t p) const { return routes_.at(p); }
  const std::vector<std::vector<int>>& routes() const { return routes_; }

  std::optional<std::size_t> index_of(Pair pair) const;

  /// Same nodes and pairs, new routes.
  Topology with_routes(std::vector<std::vector<int>> routes) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  int n_exterior_ = 0;
  int n_interior_ = 0;
  std::vector<Pair> pairs_;
  std::vector<std::vector<int>> routes_;
};

/// Nonnegative finite rate per SD pair, aligned with a topology's pair order.
class RateMatrix {
 public:
  RateMatrix() = default;
  explicit RateMatrix(std::vector<double> values);
  static RateMatrix zeros(std::size_t pair_count) { return RateMatrix(std::vector<double>(pair_count, 0.0)); }

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t p) const { return values_[p]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const RateMatrix&, const RateMatrix&) = default;

 private:
  std::vector<double> values_;
};

/// Integer message counts N^t_p for ticks t = 0..T-1, stored tick-major.
class TrafficSeries {
 public:
  using Count = std::int64_t;

  TrafficSeries() = default;
  TrafficSeries(std::size_t ticks, std::size_t pair_count);
  TrafficSeries(std::size_t ticks, std::size_t pair_count, std::vector<Count> counts);

  std::size_t ticks() const { return ticks_; }
  std::size_t pair_count() const { return pair_count_; }
  Count at(std::size_t t, std::size_t p) const { return counts_[t * pair_count_ + p]; }
  void set(std::size_t t, std::size_t p, Count value);
  std::span<const Count> tick(std::size_t t) const {
    return std::span<const Count>(counts_).subspan(t * pair_count_, pair_count_);
  }
  std::span<const Count> flat() const { return counts_; }

  friend bool operator==(const TrafficSeries&, const TrafficSeries&) = default;

 private:
  std::size_t ticks_ = 0;
  std::size_t pair_count_ = 0;
  std::vector<Count> counts_;
};

}  // namespace nettomo
