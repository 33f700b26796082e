#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nettomo/estimators.hpp"
#include "nettomo/io.hpp"
#include "nettomo/observation.hpp"
#include "nettomo/rng.hpp"
#include "nettomo/simgen.hpp"

namespace nettomo {

/// Monitors to switch on for a simulated network. `observed_fraction` adds a
/// uniformly random subset of ceil(f * |pairs|) directly observed pairs on
/// top of any listed explicitly.
struct SchemeConfig {
  bool egress = true;
  bool ingress = true;
  bool flows = true;
  double observed_fraction = 0.0;
  std::vector<Pair> observed_pairs;

  friend bool operator==(const SchemeConfig&, const SchemeConfig&) = default;
};

struct DetectConfig {
  double target_fpr = 0.05;
  double edge_tol = 0.1;
  int null_draws = 200;  // null trials used to calibrate the threshold

  friend bool operator==(const DetectConfig&, const DetectConfig&) = default;
};

enum class StudyKind { mse_vs_edges, em_iterations, roc_over_T, single_instance };

std::string to_string(StudyKind kind);
StudyKind study_kind_from_string(const std::string& name);

struct StudyConfig {
  std::optional<StudyKind> study;
  std::vector<double> fractions{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> ticks{10, 50, 150};
  std::vector<EstimatorTag> estimators{EstimatorTag::oracle, EstimatorTag::poisson_mle, EstimatorTag::hipois,
                                       EstimatorTag::mre, EstimatorTag::mre_hipois};
  int trials = 50;
  // single_instance only
  int inject_new = 0;
  int inject_missing = 0;
  double inject_rate = 1.0;

  friend bool operator==(const StudyConfig&, const StudyConfig&) = default;
};

/// Top-level config document. Every section and key is optional; unknown
/// keys are rejected with their path in the message.
struct RunConfig {
  SimConfig sim = desk_sim();
  SchemeConfig scheme;
  EstimatorSettings estimators;
  std::map<EstimatorTag, EstimatorSettings> overrides;
  DetectConfig detect;
  StudyConfig study;

  /// Settings for one estimator: the shared section plus that tag's overrides.
  const EstimatorSettings& settings_for(EstimatorTag tag) const;

  /// Desk defaults: 6 exterior nodes, 50 trials.
  static SimConfig desk_sim();
};

/// Throws ConfigError (with the offending key path) on unknown keys, wrong
/// types, or out-of-range values.
RunConfig parse_run_config(const Json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// 10 exterior nodes and 200 trials.
void apply_paper_scale(RunConfig& config);

/// Replaces the simulation seed and every estimator seed.
void override_seed(RunConfig& config, std::uint64_t seed);

Json to_json(const SimConfig& sim);
Json to_json(const EstimatorSettings& settings);
Json to_json(const SchemeConfig& scheme);
Json to_json(const RunConfig& config);

/// Monitors from the config; observed pairs are drawn with `rng` when a
/// fraction is set.
ObservationScheme resolve_scheme(const SchemeConfig& config, const Topology& topology, CounterRng& rng);

/// First `count` entries of a uniformly random permutation of 0..n-1.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, CounterRng& rng);

/// 64-bit FNV-1a of a string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace nettomo
