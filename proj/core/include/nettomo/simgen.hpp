#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nettomo/rng.hpp"
#include "nettomo/topology.hpp"

namespace nettomo {

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const { return shape / rate; }
  friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

/// Simulation knobs. Defaults are the full-size network (10 facilities, 65%
/// edge probability, Gamma(1.75, 1) baselines, Gamma(0.75, 1) diversions,
/// 20% diversion probability).
struct SimConfig {
  int n_exterior = 10;
  int n_interior = 0;
  double p_edge = 0.65;
  GammaParams baseline_gamma{1.75, 1.0};
  GammaParams diversion_gamma{0.75, 1.0};
  double p_diversion = 0.2;
  double p_missing_given_diversion = 0.25;
  double p_route = 0.5;
  int ticks = 150;
  std::uint64_t seed = 20170601;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class DiversionLabel { none, new_edge, increased, missing };

std::string to_string(DiversionLabel label);
DiversionLabel diversion_label_from_string(const std::string& name);

struct GroundTruth {
  Topology topology;
  RateMatrix baseline;
  RateMatrix truth;
  std::vector<DiversionLabel> labels;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Draws baseline support and rates, then diversions, for one trial. Each
/// component reads its own substream of (cfg.seed, trial).
GroundTruth gen_ground_truth(const SimConfig& cfg, std::uint64_t trial = 0);

/// Builds a ground truth from explicit baseline and true rates, deriving labels.
GroundTruth make_ground_truth(Topology topology, RateMatrix baseline, RateMatrix truth);

/// N^t_p ~ Poisson(rates_p), independent over pairs and ticks.
TrafficSeries sample_traffic(const RateMatrix& rates, int ticks, CounterRng& rng);
inline TrafficSeries sample_traffic(const GroundTruth& truth, int ticks, CounterRng& rng) {
  return sample_traffic(truth.truth, ticks, rng);
}

/// Each pair independently routes through one uniformly chosen interior node
/// with probability p_route, otherwise directly.
Topology assign_routes(const Topology& topology, int n_interior, CounterRng& rng, double p_route = 0.5);

}  // namespace nettomo
