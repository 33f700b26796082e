#include "nettomo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

std::string describe(Pair pair) {
  return "(" + std::to_string(pair.src) + "," + std::to_string(pair.dst) + ")";
}

}  // namespace

Topology::Topology(int n_exterior, int n_interior, std::vector<Pair> pairs,
                   std::vector<std::vector<int>> routes)
    : n_exterior_(n_exterior), n_interior_(n_interior), pairs_(std::move(pairs)), routes_(std::move(routes)) {
  if (n_exterior_ <= 0) throw ConfigError("topology needs at least one exterior node");
  if (n_interior_ < 0) throw ConfigError("interior node count must be nonnegative");
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    const Pair& pair = pairs_[p];
    if (pair.src < 0 || pair.src >= n_exterior_ || pair.dst < 0 || pair.dst >= n_exterior_)
      throw ConfigError("pair " + describe(pair) + " references an unknown exterior node");
    if (pair.src == pair.dst) throw ConfigError("self pair " + describe(pair) + " is not allowed");
    if (p > 0 && !(pairs_[p - 1] < pair))
      throw ConfigError("pairs must be strictly increasing in (src, dst) order; offending pair " + describe(pair));
  }
  if (routes_.empty()) routes_.resize(pairs_.size());
  if (routes_.size() != pairs_.size()) throw ConfigError("route list length must equal pair count");
  for (std::size_t p = 0; p < routes_.size(); ++p) {
    for (int u : routes_[p]) {
      if (u < 0 || u >= n_interior_)
        throw ConfigError("route of pair " + describe(pairs_[p]) + " references unknown interior node " +
                          std::to_string(u));
    }
  }
}

Topology Topology::complete(int n_exterior, int n_interior) {
  std::vector<Pair> pairs;
  if (n_exterior > 0) pairs.reserve(static_cast<std::size_t>(n_exterior) * (n_exterior - 1));
  for (int i = 0; i < n_exterior; ++i)
    for (int j = 0; j < n_exterior; ++j)
      if (i != j) pairs.push_back({i, j});
  return Topology(n_exterior, n_interior, std::move(pairs));
}

std::optional<std::size_t> Topology::index_of(Pair pair) const {
  auto it = std::lower_bound(pairs_.begin(), pairs_.end(), pair);
  if (it == pairs_.end() || *it != pair) return std::nullopt;
  return static_cast<std::size_t>(it - pairs_.begin());
}

Topology Topology::with_routes(std::vector<std::vector<int>> routes) const {
  return Topology(n_exterior_, n_interior_, pairs_, std::move(routes));
}

RateMatrix::RateMatrix(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw ContractError("rates must be finite and nonnegative");
  }
}

TrafficSeries::TrafficSeries(std::size_t ticks, std::size_t pair_count)
    : ticks_(ticks), pair_count_(pair_count), counts_(ticks * pair_count, 0) {}

TrafficSeries::TrafficSeries(std::size_t ticks, std::size_t pair_count, std::vector<Count> counts)
    : ticks_(ticks), pair_count_(pair_count), counts_(std::move(counts)) {
  if (counts_.size() != ticks_ * pair_count_) throw ContractError("traffic count array has the wrong length");
  if (std::any_of(counts_.begin(), counts_.end(), [](Count c) { return c < 0; }))
    throw ContractError("traffic counts must be nonnegative");
}

void TrafficSeries::set(std::size_t t, std::size_t p, Count value) {
  if (value < 0) throw ContractError("traffic counts must be nonnegative");
  counts_.at(t * pair_count_ + p) = value;
}

}  // namespace nettomo
