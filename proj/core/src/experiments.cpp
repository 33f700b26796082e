#include "nettomo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "nettomo/error.hpp"

namespace nettomo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Null-calibration draws use their own estimator seeds, well away from trial indices.
constexpr std::uint64_t kNullSeedOffset = 1ULL << 40;

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<EstimatorTag> used_estimators(const ExperimentSpec& spec) {
  switch (spec.study) {
    case StudyKind::mse_vs_edges: return spec.estimators;
    case StudyKind::em_iterations: return {EstimatorTag::hipois, EstimatorTag::mre_hipois};
    case StudyKind::roc_over_T:
    case StudyKind::single_instance: return {EstimatorTag::mre_hipois};
  }
  return {};
}

Json provenance_json(const Provenance& p) {
  return Json{{"seed", p.seed}, {"trials", p.trials}, {"settings_hash", p.settings_hash}};
}

Provenance provenance_of(const ExperimentSpec& spec) { return {spec.seed(), spec.trials, spec.settings_hash()}; }

std::vector<std::string> provenance_fields(const Provenance& p) {
  return {std::to_string(p.seed), std::to_string(p.trials), p.settings_hash};
}

std::string with_provenance(std::vector<std::string> fields, const Provenance& p) {
  for (auto& f : provenance_fields(p)) fields.push_back(std::move(f));
  return csv_row(fields);
}

Json stats_json(const SampleStats& s) {
  return Json{{"count", s.count}, {"mean", s.mean}, {"std_error", s.std_error}};
}

// Keeps the first error message per trial slot so the log is thread-order independent.
class ErrorLog {
 public:
  explicit ErrorLog(std::size_t slots) : messages_(slots) {}
  void record(std::size_t slot, const std::string& what) {
    if (messages_[slot].empty()) messages_[slot] = what;
  }
  std::vector<std::string> collect(const char* prefix) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < messages_.size(); ++i)
      if (!messages_[i].empty()) out.push_back(std::string(prefix) + " " + std::to_string(i) + ": " + messages_[i]);
    return out;
  }

 private:
  std::vector<std::string> messages_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Spec.

const EstimatorSettings& ExperimentSpec::settings_for(EstimatorTag tag) const {
  static const EstimatorSettings defaults;
  auto it = settings.find(tag);
  return it == settings.end() ? defaults : it->second;
}

std::string ExperimentSpec::settings_hash() const {
  Json j = Json::object();
  for (auto tag : used_estimators(*this)) j[to_string(tag)] = to_json(settings_for(tag));
  return fnv1a_hex(j.dump());
}

void ExperimentSpec::validate() const {
  sim.validate();
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (fractions.empty() || ticks.empty()) throw ConfigError("sweep values must not be empty");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0 && fractions[i] <= 1.0)) throw ConfigError("fractions must lie in [0, 1]");
    if (i && !(fractions[i - 1] < fractions[i])) throw ConfigError("fractions must be strictly ascending");
  }
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    if (ticks[i] < 1) throw ConfigError("T values must be positive");
    if (i && !(ticks[i - 1] < ticks[i])) throw ConfigError("T values must be strictly ascending");
  }
  if (study == StudyKind::mse_vs_edges && estimators.empty()) throw ConfigError("no estimators to compare");
  for (auto tag : used_estimators(*this)) settings_for(tag).validate();
  if (inject_new < 0 || inject_missing < 0 || !(inject_rate > 0.0))
    throw ConfigError("injection counts must be nonnegative and the rate positive");
}

ExperimentSpec make_experiment_spec(const RunConfig& config, StudyKind study, int threads) {
  ExperimentSpec spec;
  spec.study = study;
  spec.sim = config.sim;
  spec.scheme = config.scheme;
  spec.fractions = config.study.fractions;
  spec.ticks = config.study.ticks;
  spec.estimators = config.study.estimators;
  spec.trials = config.study.trials;
  for (auto tag : {EstimatorTag::oracle, EstimatorTag::poisson_mle, EstimatorTag::hipois, EstimatorTag::mre,
                   EstimatorTag::mre_hipois})
    spec.settings[tag] = config.settings_for(tag);
  spec.detect = config.detect;
  spec.inject_new = config.study.inject_new;
  spec.inject_missing = config.study.inject_missing;
  spec.inject_rate = config.study.inject_rate;
  spec.threads = threads;
  return spec;
}

// ---------------------------------------------------------------------------
// Building blocks.

TrialData observe_trial(const SimConfig& sim, const SchemeConfig& scheme, GroundTruth truth, std::uint64_t trial,
                        int ticks) {
  TrialData data;
  auto edge_rng = CounterRng::substream(sim.seed, Stream::observed_edges, trial);
  data.scheme = resolve_scheme(scheme, truth.topology, edge_rng);
  data.op = build_operator(truth.topology, data.scheme);
  auto traffic_rng = CounterRng::substream(sim.seed, Stream::traffic, trial);
  data.traffic = sample_traffic(truth, ticks, traffic_rng);
  data.observations = apply_operator(data.op, data.traffic);
  data.truth = std::move(truth);
  return data;
}

TrialData make_trial(const SimConfig& sim, const SchemeConfig& scheme, std::uint64_t trial, int ticks) {
  return observe_trial(sim, scheme, gen_ground_truth(sim, trial), trial, ticks);
}

EstimatorSettings trial_settings(const EstimatorSettings& settings, std::uint64_t seed, std::uint64_t trial) {
  EstimatorSettings out = settings;
  out.seed = CounterRng::substream(seed, Stream::estimator_init, trial)() ^ settings.seed;
  return out;
}

double mean_squared_error(const RateMatrix& estimate, const RateMatrix& truth) {
  if (estimate.size() != truth.size() || truth.size() == 0) throw ContractError("MSE needs equal, nonempty rate vectors");
  std::vector<double> sq(truth.size());
  for (std::size_t p = 0; p < truth.size(); ++p) sq[p] = (estimate[p] - truth[p]) * (estimate[p] - truth[p]);
  return pairwise_sum(sq) / static_cast<double>(sq.size());
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr first_error;
  std::size_t first_index = n;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

SampleStats sample_stats(std::span<const double> values) {
  std::vector<double> kept;
  for (double v : values)
    if (!std::isnan(v)) kept.push_back(v);
  SampleStats s;
  s.count = static_cast<int>(kept.size());
  if (kept.empty()) {
    s.mean = kNaN;
    s.std_error = kNaN;
    return s;
  }
  const double n = static_cast<double>(kept.size());
  s.mean = pairwise_sum(kept) / n;
  if (kept.size() < 2) return s;
  std::vector<double> dev(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) dev[i] = (kept[i] - s.mean) * (kept[i] - s.mean);
  s.std_error = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
  return s;
}

NullCalibration calibrate_null_threshold(const ObservationOperator& op, const RateMatrix& baseline, int ticks,
                                         const EstimatorSettings& settings, int draws, double target_fpr,
                                         std::uint64_t seed, int threads) {
  if (draws < 1) throw ContractError("null calibration needs at least one draw");
  std::vector<double> stats(static_cast<std::size_t>(draws), kNaN);
  parallel_for(stats.size(), threads, [&](std::size_t d) {
    auto rng = CounterRng::substream(seed, Stream::null_draws, d);
    const TrafficSeries traffic = sample_traffic(baseline, ticks, rng);
    const ObservationSeries obs = apply_operator(op, traffic);
    try {
      const auto report = mre_hipois(obs, op, baseline, trial_settings(settings, seed, kNullSeedOffset + d));
      stats[d] = frobenius_divergence(report.lambda_hat, baseline);
    } catch (const ComputationError&) {
    }
  });
  NullCalibration out;
  for (double s : stats) {
    if (std::isnan(s))
      ++out.failures;
    else
      out.statistics.push_back(s);
  }
  out.threshold = calibrate_threshold(out.statistics, target_fpr);
  return out;
}

GroundTruth inject_anomalies(const GroundTruth& null_truth, int new_edges, int missing, double rate,
                             double min_missing_rate, std::uint64_t seed, std::uint64_t trial) {
  std::vector<std::size_t> empty;
  std::vector<std::size_t> support;
  for (std::size_t p = 0; p < null_truth.baseline.size(); ++p) {
    if (null_truth.baseline[p] == 0.0) empty.push_back(p);
    if (null_truth.baseline[p] > min_missing_rate) support.push_back(p);
  }
  if (static_cast<std::size_t>(new_edges) > empty.size() || static_cast<std::size_t>(missing) > support.size())
    throw ConfigError("not enough candidate pairs to inject the requested anomalies");
  auto rng = CounterRng::substream(seed, Stream::trial_arm, trial);
  std::vector<double> truth(null_truth.baseline.values().begin(), null_truth.baseline.values().end());
  for (std::size_t i : sample_without_replacement(empty.size(), static_cast<std::size_t>(new_edges), rng))
    truth[empty[i]] = rate;
  for (std::size_t i : sample_without_replacement(support.size(), static_cast<std::size_t>(missing), rng))
    truth[support[i]] = 0.0;
  return make_ground_truth(null_truth.topology, null_truth.baseline, RateMatrix(std::move(truth)));
}

// ---------------------------------------------------------------------------
// Studies.

MseStudy run_mse_vs_edges(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t F = spec.fractions.size();
  const std::size_t E = spec.estimators.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  std::vector<double> mse(F * E * trials, kNaN);
  ErrorLog log(trials);

  parallel_for(trials, spec.threads, [&](std::size_t t) {
    const GroundTruth truth = gen_ground_truth(spec.sim, t);
    for (std::size_t fi = 0; fi < F; ++fi) {
      SchemeConfig scheme = spec.scheme;
      scheme.observed_fraction = spec.fractions[fi];
      const TrialData data = observe_trial(spec.sim, scheme, truth, t, spec.sim.ticks);
      const EstimationInput input{data.op, data.observations, data.truth.baseline, &data.traffic};
      for (std::size_t ei = 0; ei < E; ++ei) {
        const EstimatorTag tag = spec.estimators[ei];
        try {
          const auto report = run_estimator(tag, input, trial_settings(spec.settings_for(tag), spec.seed(), t));
          mse[(fi * E + ei) * trials + t] = mean_squared_error(report.lambda_hat, data.truth.truth);
        } catch (const ComputationError& e) {
          log.record(t, to_string(tag) + ": " + e.what());
        }
      }
    }
  });

  MseStudy study;
  study.provenance = provenance_of(spec);
  study.ticks = spec.sim.ticks;
  for (std::size_t fi = 0; fi < F; ++fi) {
    for (std::size_t ei = 0; ei < E; ++ei) {
      MseCell cell;
      cell.fraction = spec.fractions[fi];
      cell.estimator = spec.estimators[ei];
      cell.mse = sample_stats(std::span<const double>(mse).subspan((fi * E + ei) * trials, trials));
      cell.failures = spec.trials - cell.mse.count;
      study.cells.push_back(cell);
    }
  }
  study.errors = log.collect("trial");
  return study;
}

IterationStudy run_em_iterations(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t TT = spec.ticks.size();
  const std::size_t F = spec.fractions.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  const std::size_t cells = TT * F;
  // random: per trial, one entry per restart; mre: one entry per trial.
  std::vector<std::vector<double>> random_runs(cells * trials);
  std::vector<double> mre_runs(cells * trials, kNaN);
  std::vector<char> random_failed(cells * trials, 0);
  ErrorLog log(trials);

  EstimatorSettings random_settings = spec.settings_for(EstimatorTag::hipois);
  random_settings.init_mode = InitMode::random;
  const EstimatorSettings& mre_settings = spec.settings_for(EstimatorTag::mre_hipois);

  parallel_for(trials, spec.threads, [&](std::size_t t) {
    const GroundTruth truth = gen_ground_truth(spec.sim, t);
    for (std::size_t ti = 0; ti < TT; ++ti) {
      for (std::size_t fi = 0; fi < F; ++fi) {
        SchemeConfig scheme = spec.scheme;
        scheme.observed_fraction = spec.fractions[fi];
        const TrialData data = observe_trial(spec.sim, scheme, truth, t, spec.ticks[ti]);
        const std::size_t slot = (ti * F + fi) * trials + t;
        try {
          const auto report =
              hipois_em(data.observations, data.op, data.truth.baseline, trial_settings(random_settings, spec.seed(), t));
          for (int it : report.restart_iterations) random_runs[slot].push_back(it);
        } catch (const ComputationError& e) {
          random_failed[slot] = 1;
          log.record(t, std::string("hipois: ") + e.what());
        }
        try {
          const auto report =
              mre_hipois(data.observations, data.op, data.truth.baseline, trial_settings(mre_settings, spec.seed(), t));
          mre_runs[slot] = report.iterations;
        } catch (const ComputationError& e) {
          log.record(t, std::string("mre_hipois: ") + e.what());
        }
      }
    }
  });

  IterationStudy study;
  study.provenance = provenance_of(spec);
  for (std::size_t ti = 0; ti < TT; ++ti) {
    for (std::size_t fi = 0; fi < F; ++fi) {
      const std::size_t base = (ti * F + fi) * trials;
      IterationCell random{spec.ticks[ti], spec.fractions[fi], InitMode::random, {}, 0, 0};
      std::vector<double> runs;
      for (std::size_t t = 0; t < trials; ++t) {
        random.failures += random_failed[base + t];
        for (double v : random_runs[base + t]) {
          runs.push_back(v);
          if (v >= random_settings.em_max_iter) ++random.censored;
        }
      }
      random.iterations = sample_stats(runs);
      study.cells.push_back(random);

      IterationCell mre{spec.ticks[ti], spec.fractions[fi], InitMode::mre, {}, 0, 0};
      const auto slice = std::span<const double>(mre_runs).subspan(base, trials);
      mre.iterations = sample_stats(slice);
      mre.failures = spec.trials - mre.iterations.count;
      for (double v : slice)
        if (!std::isnan(v) && v >= mre_settings.em_max_iter) ++mre.censored;
      study.cells.push_back(mre);
    }
  }
  study.errors = log.collect("trial");
  return study;
}

RocStudy run_roc_over_T(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t TT = spec.ticks.size();
  const auto trials = static_cast<std::size_t>(spec.trials);
  std::vector<double> stats(TT * trials, kNaN);
  std::vector<char> positive(trials, 0);
  ErrorLog log(trials);
  const EstimatorSettings& settings = spec.settings_for(EstimatorTag::mre_hipois);

  parallel_for(trials, spec.threads, [&](std::size_t t) {
    // Even trials draw diversions, odd trials are null.
    SimConfig sim = spec.sim;
    if (t % 2 == 1) sim.p_diversion = 0.0;
    const GroundTruth truth = gen_ground_truth(sim, t);
    positive[t] = std::any_of(truth.labels.begin(), truth.labels.end(),
                              [](DiversionLabel l) { return l != DiversionLabel::none; });
    for (std::size_t ti = 0; ti < TT; ++ti) {
      const TrialData data = observe_trial(sim, spec.scheme, truth, t, spec.ticks[ti]);
      try {
        const auto report =
            mre_hipois(data.observations, data.op, data.truth.baseline, trial_settings(settings, spec.seed(), t));
        stats[ti * trials + t] = frobenius_divergence(report.lambda_hat, data.truth.baseline);
      } catch (const ComputationError& e) {
        log.record(t, std::string("mre_hipois: ") + e.what());
      }
    }
  });

  RocStudy study;
  study.provenance = provenance_of(spec);
  for (std::size_t ti = 0; ti < TT; ++ti) {
    RocEntry entry;
    entry.ticks = spec.ticks[ti];
    std::vector<double> kept;
    std::vector<bool> labels;
    for (std::size_t t = 0; t < trials; ++t) {
      const double s = stats[ti * trials + t];
      if (std::isnan(s)) {
        ++entry.failures;
        continue;
      }
      kept.push_back(s);
      labels.push_back(positive[t] != 0);
      (positive[t] ? entry.positives : entry.negatives)++;
    }
    if (entry.positives > 0 && entry.negatives > 0) entry.curve = roc_curve(kept, labels);
    study.entries.push_back(entry);
  }
  study.errors = log.collect("trial");
  return study;
}

SingleInstance run_single_instance(const ExperimentSpec& spec) {
  spec.validate();
  SingleInstance out;
  out.provenance = provenance_of(spec);
  out.provenance.trials = 1;
  out.ticks = spec.sim.ticks;

  GroundTruth truth;
  if (spec.inject_new > 0 || spec.inject_missing > 0) {
    SimConfig null_sim = spec.sim;
    null_sim.p_diversion = 0.0;
    truth = inject_anomalies(gen_ground_truth(null_sim, 0), spec.inject_new, spec.inject_missing, spec.inject_rate,
                             spec.detect.edge_tol, spec.seed(), 0);
    for (std::size_t p = 0; p < truth.labels.size(); ++p) {
      if (truth.labels[p] == DiversionLabel::new_edge) out.injected_new.push_back(truth.topology.pair(p));
      if (truth.labels[p] == DiversionLabel::missing) out.injected_missing.push_back(truth.topology.pair(p));
    }
  } else {
    truth = gen_ground_truth(spec.sim, 0);
  }
  const TrialData data = observe_trial(spec.sim, spec.scheme, std::move(truth), 0, spec.sim.ticks);
  const EstimatorSettings& settings = spec.settings_for(EstimatorTag::mre_hipois);
  out.estimate = mre_hipois(data.observations, data.op, data.truth.baseline, trial_settings(settings, spec.seed(), 0));
  const auto calibration = calibrate_null_threshold(data.op, data.truth.baseline, spec.sim.ticks, settings,
                                                    spec.detect.null_draws, spec.detect.target_fpr, spec.seed(),
                                                    spec.threads);
  out.detection = detect(out.estimate.lambda_hat, data.truth.baseline, calibration.threshold, spec.detect.edge_tol);
  out.truth = data.truth;
  for (std::size_t p = 0; p < out.truth.topology.pair_count(); ++p) {
    EdgeDiff e{out.truth.topology.pair(p), out.truth.baseline[p], out.estimate.lambda_hat[p], out.truth.truth[p],
               out.detection.per_edge[p].label};
    out.edges.push_back(e);
    if (e.label != EdgeLabel::normal) out.diff.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output.

Json write_study(const MseStudy& study, const ExperimentSpec& spec, const std::filesystem::path& dir) {
  std::string table = csv_row({"fraction", "estimator", "mean_mse", "std_error", "completed", "failures", "seed",
                               "trials", "settings_hash"});
  std::string plot = csv_row({"x", "y", "y_err", "series"});
  Json cells = Json::array();
  for (const auto& c : study.cells) {
    table += with_provenance({format_number(c.fraction), to_string(c.estimator), format_number(c.mse.mean),
                              format_number(c.mse.std_error), std::to_string(c.mse.count),
                              std::to_string(c.failures)},
                             study.provenance);
    plot += csv_row({format_number(c.fraction), format_number(c.mse.mean), format_number(c.mse.std_error),
                     to_string(c.estimator)});
    Json cell{{"fraction", c.fraction}, {"estimator", to_string(c.estimator)}, {"mse", stats_json(c.mse)},
              {"failures", c.failures}};
    cells.push_back(cell);
  }
  Json summary{{"study", "mse_vs_edges"}, {"provenance", provenance_json(study.provenance)},
               {"n_exterior", spec.sim.n_exterior}, {"ticks", study.ticks}, {"cells", cells},
               {"errors", study.errors}};
  write_text_file(dir / "mse_vs_edges.csv", table);
  write_text_file(dir / "mse_vs_edges_plot.csv", plot);
  write_json_file(dir / "mse_vs_edges.json", summary);
  return summary;
}

Json write_study(const IterationStudy& study, const ExperimentSpec& spec, const std::filesystem::path& dir) {
  std::string table = csv_row({"ticks", "fraction", "init_mode", "mean_iterations", "std_error", "runs", "censored",
                               "failures", "seed", "trials", "settings_hash"});
  std::string plot = csv_row({"x", "y", "y_err", "series"});
  Json cells = Json::array();
  for (const auto& c : study.cells) {
    table += with_provenance({std::to_string(c.ticks), format_number(c.fraction), to_string(c.init),
                              format_number(c.iterations.mean), format_number(c.iterations.std_error),
                              std::to_string(c.iterations.count), std::to_string(c.censored),
                              std::to_string(c.failures)},
                             study.provenance);
    plot += csv_row({format_number(c.fraction), format_number(c.iterations.mean),
                     format_number(c.iterations.std_error), to_string(c.init) + " T=" + std::to_string(c.ticks)});
    cells.push_back(Json{{"ticks", c.ticks}, {"fraction", c.fraction}, {"init_mode", to_string(c.init)},
                         {"iterations", stats_json(c.iterations)}, {"censored", c.censored},
                         {"failures", c.failures}});
  }
  Json summary{{"study", "em_iterations"}, {"provenance", provenance_json(study.provenance)},
               {"n_exterior", spec.sim.n_exterior}, {"em_max_iter", spec.settings_for(EstimatorTag::hipois).em_max_iter},
               {"cells", cells}, {"errors", study.errors}};
  write_text_file(dir / "em_iterations.csv", table);
  write_text_file(dir / "em_iterations_plot.csv", plot);
  write_json_file(dir / "em_iterations.json", summary);
  return summary;
}

Json write_study(const RocStudy& study, const ExperimentSpec& spec, const std::filesystem::path& dir) {
  std::string table = csv_row({"ticks", "auc", "positives", "negatives", "failures", "seed", "trials", "settings_hash"});
  std::string plot = csv_row({"x", "y", "series"});
  Json entries = Json::array();
  for (const auto& e : study.entries) {
    table += with_provenance({std::to_string(e.ticks), format_number(e.curve.auc), std::to_string(e.positives),
                              std::to_string(e.negatives), std::to_string(e.failures)},
                             study.provenance);
    for (const auto& p : e.curve.points)
      plot += csv_row({format_number(p.fpr), format_number(p.tpr), "T=" + std::to_string(e.ticks)});
    write_text_file(dir / ("roc_T" + std::to_string(e.ticks) + ".csv"), roc_csv(e.curve));
    entries.push_back(Json{{"ticks", e.ticks}, {"auc", e.curve.auc}, {"positives", e.positives},
                           {"negatives", e.negatives}, {"failures", e.failures}, {"roc", to_json(e.curve)}});
  }
  Json summary{{"study", "roc_over_T"}, {"provenance", provenance_json(study.provenance)},
               {"n_exterior", spec.sim.n_exterior}, {"observed_fraction", spec.scheme.observed_fraction},
               {"entries", entries}, {"errors", study.errors}};
  write_text_file(dir / "roc_over_T.csv", table);
  write_text_file(dir / "roc_over_T_plot.csv", plot);
  write_json_file(dir / "roc_over_T.json", summary);
  return summary;
}

namespace {

Json edge_json(const EdgeDiff& e) {
  return Json{{"pair", to_json(e.pair)}, {"label", to_string(e.label)}, {"baseline", e.baseline},
              {"estimate", e.estimate}, {"truth", e.truth}};
}

}  // namespace

Json diff_to_json(const SingleInstance& study) {
  Json injected_new = Json::array();
  for (const auto& p : study.injected_new) injected_new.push_back(to_json(p));
  Json injected_missing = Json::array();
  for (const auto& p : study.injected_missing) injected_missing.push_back(to_json(p));
  Json diff = Json::array();
  for (const auto& e : study.diff) diff.push_back(edge_json(e));
  return Json{{"study", "single_instance"},
              {"provenance", provenance_json(study.provenance)},
              {"ticks", study.ticks},
              {"statistic", study.detection.statistic},
              {"threshold", study.detection.threshold},
              {"decision", study.detection.decision},
              {"injected_new", injected_new},
              {"injected_missing", injected_missing},
              {"diff", diff}};
}

std::vector<EdgeDiff> diff_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("diff") || !j["diff"].is_array()) throw IoError("diff document lacks a 'diff' array");
  std::vector<EdgeDiff> out;
  for (const auto& e : j["diff"]) {
    EdgeDiff d;
    try {
      d.pair = pair_from_json(e.at("pair"));
      d.label = edge_label_from_string(e.at("label").get<std::string>());
      d.baseline = e.at("baseline").get<double>();
      d.estimate = e.at("estimate").get<double>();
      d.truth = e.at("truth").get<double>();
    } catch (const nlohmann::json::exception& err) {
      throw IoError(std::string("malformed diff entry: ") + err.what());
    } catch (const ConfigError& err) {
      throw IoError(err.what());
    }
    out.push_back(d);
  }
  return out;
}

Json write_study(const SingleInstance& study, const ExperimentSpec&, const std::filesystem::path& dir) {
  std::string edges = csv_row({"src", "dst", "baseline", "estimate", "truth", "label"});
  for (const auto& e : study.edges)
    edges += csv_row({std::to_string(e.pair.src), std::to_string(e.pair.dst), format_number(e.baseline),
                      format_number(e.estimate), format_number(e.truth), to_string(e.label)});
  Json summary = diff_to_json(study);
  write_json_file(dir / "single_instance.json", summary);
  write_text_file(dir / "single_instance_edges.csv", edges);
  write_json_file(dir / "single_instance_estimate.json", to_json(study.estimate));
  return summary;
}

StudyOutcome run_study(const ExperimentSpec& spec, const std::filesystem::path& dir) {
  StudyOutcome out;
  switch (spec.study) {
    case StudyKind::mse_vs_edges: {
      const auto study = run_mse_vs_edges(spec);
      out.summary = write_study(study, spec, dir);
      out.headline = "mse_vs_edges:";
      for (const auto& c : study.cells) {
        out.attempted += spec.trials;
        out.failed += c.failures;
        if (c.fraction == spec.fractions.front())
          out.headline += " " + to_string(c.estimator) + "=" + fixed(c.mse.mean);
      }
      out.headline += " (f=" + format_number(spec.fractions.front()) + ")";
      break;
    }
    case StudyKind::em_iterations: {
      const auto study = run_em_iterations(spec);
      out.summary = write_study(study, spec, dir);
      out.headline = "em_iterations:";
      for (const auto& c : study.cells) {
        out.attempted += spec.trials;
        out.failed += c.failures;
        if (c.fraction == spec.fractions.front() && c.ticks == spec.ticks.back())
          out.headline += " " + to_string(c.init) + "=" + fixed(c.iterations.mean, 1);
      }
      out.headline += " (T=" + std::to_string(spec.ticks.back()) + ", f=" + format_number(spec.fractions.front()) + ")";
      break;
    }
    case StudyKind::roc_over_T: {
      const auto study = run_roc_over_T(spec);
      out.summary = write_study(study, spec, dir);
      out.headline = "roc_over_T: AUC";
      for (const auto& e : study.entries) {
        out.attempted += spec.trials;
        out.failed += e.failures;
        out.headline += " T=" + std::to_string(e.ticks) + ":" + fixed(e.curve.auc);
      }
      break;
    }
    case StudyKind::single_instance: {
      const auto study = run_single_instance(spec);
      out.summary = write_study(study, spec, dir);
      out.attempted = 1;
      int added = 0, removed = 0, changed = 0;
      for (const auto& e : study.diff) {
        if (e.label == EdgeLabel::new_edge) ++added;
        if (e.label == EdgeLabel::missing) ++removed;
        if (e.label == EdgeLabel::changed) ++changed;
      }
      out.headline = "single_instance: statistic=" + fixed(study.detection.statistic) +
                     " threshold=" + fixed(study.detection.threshold) +
                     " decision=" + (study.detection.decision ? "anomalous" : "normal") +
                     " new=" + std::to_string(added) + " missing=" + std::to_string(removed) +
                     " changed=" + std::to_string(changed);
      break;
    }
  }
  return out;
}

}  // namespace nettomo
