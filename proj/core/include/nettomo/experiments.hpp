#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nettomo/config.hpp"
#include "nettomo/detect.hpp"
#include "nettomo/estimators.hpp"
#include "nettomo/io.hpp"
#include "nettomo/simgen.hpp"

namespace nettomo {

struct ExperimentSpec {
  StudyKind study = StudyKind::mse_vs_edges;
  SimConfig sim;  // sim.seed is the root seed of every stream
  SchemeConfig scheme;
  std::vector<double> fractions{0.0};
  std::vector<int> ticks{150};
  std::vector<EstimatorTag> estimators;
  int trials = 50;
  std::map<EstimatorTag, EstimatorSettings> settings;  // missing tags use defaults
  DetectConfig detect;
  /// single_instance: explicit new/missing edges injected into a null network.
  int inject_new = 0;
  int inject_missing = 0;
  double inject_rate = 1.0;
  int threads = 0;  // 0 = hardware concurrency

  const EstimatorSettings& settings_for(EstimatorTag tag) const;
  std::uint64_t seed() const { return sim.seed; }
  /// FNV-1a over the canonical JSON of the per-estimator settings in use.
  std::string settings_hash() const;
  void validate() const;
};

ExperimentSpec make_experiment_spec(const RunConfig& config, StudyKind study, int threads = 0);

// ---------------------------------------------------------------------------
// Building blocks shared by the studies and the command line.

/// Everything generated for one trial.
struct TrialData {
  GroundTruth truth;
  ObservationScheme scheme;
  ObservationOperator op;
  TrafficSeries traffic;
  ObservationSeries observations;
};

/// Ground truth from (sim.seed, trial); observed pairs from the observed-edge
/// substream of the same trial; traffic from the traffic substream.
TrialData make_trial(const SimConfig& sim, const SchemeConfig& scheme, std::uint64_t trial, int ticks);

/// Observations for an existing ground truth (used by the ROC and single-instance studies).
TrialData observe_trial(const SimConfig& sim, const SchemeConfig& scheme, GroundTruth truth, std::uint64_t trial,
                        int ticks);

/// Per-trial copy of the settings with its own restart seed.
EstimatorSettings trial_settings(const EstimatorSettings& settings, std::uint64_t seed, std::uint64_t trial);

double mean_squared_error(const RateMatrix& estimate, const RateMatrix& truth);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Fixed-order pairwise summation: the result depends only on the input order.
double pairwise_sum(std::span<const double> values);

struct SampleStats {
  int count = 0;
  double mean = 0.0;
  double std_error = 0.0;  // sample std (n - 1) / sqrt(n); 0 when n < 2
};

/// Ignores NaN entries (failed trials).
SampleStats sample_stats(std::span<const double> values);

struct NullCalibration {
  double threshold = 0.0;
  std::vector<double> statistics;
  int failures = 0;
};

/// Frobenius statistics of mre_hipois on `draws` traffic series simulated
/// from the baseline itself, and their (1 - target_fpr) quantile.
NullCalibration calibrate_null_threshold(const ObservationOperator& op, const RateMatrix& baseline, int ticks,
                                         const EstimatorSettings& settings, int draws, double target_fpr,
                                         std::uint64_t seed, int threads = 0);

// ---------------------------------------------------------------------------
// Studies.

struct Provenance {
  std::uint64_t seed = 0;
  int trials = 0;
  std::string settings_hash;
};

struct MseCell {
  double fraction = 0.0;
  EstimatorTag estimator = EstimatorTag::oracle;
  SampleStats mse;
  int failures = 0;
};

struct MseStudy {
  Provenance provenance;
  int ticks = 0;
  std::vector<MseCell> cells;  // fraction-major, estimators in spec order
  std::vector<std::string> errors;
};

struct IterationCell {
  int ticks = 0;
  double fraction = 0.0;
  InitMode init = InitMode::random;
  SampleStats iterations;  // per EM run
  int censored = 0;        // runs that hit em_max_iter
  int failures = 0;
};

struct IterationStudy {
  Provenance provenance;
  std::vector<IterationCell> cells;  // T-major, then fraction, then random before mre
  std::vector<std::string> errors;
};

struct RocEntry {
  int ticks = 0;
  RocCurve curve;
  int positives = 0;
  int negatives = 0;
  int failures = 0;
};

struct RocStudy {
  Provenance provenance;
  std::vector<RocEntry> entries;
  std::vector<std::string> errors;
};

struct EdgeDiff {
  Pair pair;
  double baseline = 0.0;
  double estimate = 0.0;
  double truth = 0.0;
  EdgeLabel label = EdgeLabel::normal;
};

struct SingleInstance {
  Provenance provenance;
  int ticks = 0;
  GroundTruth truth;
  EstimateReport estimate;
  DetectionResult detection;
  std::vector<Pair> injected_new;
  std::vector<Pair> injected_missing;
  std::vector<EdgeDiff> edges;  // every pair in order
  std::vector<EdgeDiff> diff;   // non-normal edges only
};

MseStudy run_mse_vs_edges(const ExperimentSpec& spec);
IterationStudy run_em_iterations(const ExperimentSpec& spec);
RocStudy run_roc_over_T(const ExperimentSpec& spec);
SingleInstance run_single_instance(const ExperimentSpec& spec);

/// Adds `new_edges` unused pairs at `rate` and removes `missing` baseline
/// edges whose rate exceeds `min_missing_rate` from a diversion-free network.
/// Picks come from the trial-arm substream.
GroundTruth inject_anomalies(const GroundTruth& null_truth, int new_edges, int missing, double rate,
                             double min_missing_rate, std::uint64_t seed, std::uint64_t trial);

// Output. Each writer returns the JSON summary it also stored in `dir`.
Json write_study(const MseStudy& study, const ExperimentSpec& spec, const std::filesystem::path& dir);
Json write_study(const IterationStudy& study, const ExperimentSpec& spec, const std::filesystem::path& dir);
Json write_study(const RocStudy& study, const ExperimentSpec& spec, const std::filesystem::path& dir);
Json write_study(const SingleInstance& study, const ExperimentSpec& spec, const std::filesystem::path& dir);

Json diff_to_json(const SingleInstance& study);
std::vector<EdgeDiff> diff_from_json(const Json& j);

struct StudyOutcome {
  Json summary;
  std::string headline;  // one line for standard output
  int attempted = 0;
  int failed = 0;
};

/// Runs the study named in the spec and writes its files.
StudyOutcome run_study(const ExperimentSpec& spec, const std::filesystem::path& dir);

}  // namespace nettomo
