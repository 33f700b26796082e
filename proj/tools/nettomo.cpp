// nettomo: simulate monitored networks, estimate SD-pair rates, flag diversions,
// and run the simulation studies.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "nettomo/config.hpp"
#include "nettomo/detect.hpp"
#include "nettomo/error.hpp"
#include "nettomo/estimators.hpp"
#include "nettomo/experiments.hpp"
#include "nettomo/io.hpp"

namespace fs = std::filesystem;
using namespace nettomo;

namespace {

enum ExitCode { kOk = 0, kIo = 1, kConfig = 2, kComputation = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool paper_scale = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration (defaults apply when omitted)");
  cmd->add_option("--seed", c.seed, "Root seed, overrides every seed in the config");
  cmd->add_option("--threads", c.threads, "Worker threads (default: available cores)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--paper-scale", c.paper_scale, "10 exterior nodes and 200 trials");
}

RunConfig load(const Common& c) {
  RunConfig config = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.paper_scale) apply_paper_scale(config);
  if (c.seed) override_seed(config, *c.seed);
  return config;
}

int threads_of(const Common& c) {
  return c.threads > 0 ? c.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

Json with_seed(std::uint64_t seed, const Json& body) {
  Json out{{"seed", seed}};
  for (auto it = body.begin(); it != body.end(); ++it) out[it.key()] = it.value();
  return out;
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string out;
  std::uint64_t trial = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  const RunConfig config = load(a.common);
  const TrialData data = make_trial(config.sim, config.scheme, a.trial, config.sim.ticks);
  const std::uint64_t seed = config.sim.seed;
  const fs::path dir = a.out;
  write_json_file(dir / "ground_truth.json", with_seed(seed, to_json(data.truth)));
  write_json_file(dir / "traffic.json", with_seed(seed, to_json(data.traffic)));
  ObservationBundle bundle{data.truth.topology, data.scheme, data.truth.baseline, data.observations, seed};
  write_json_file(dir / "observations.json", to_json(bundle));
  std::cout << "simulate: " << data.truth.topology.pair_count() << " pairs, " << data.op.row_count() << " rows, T="
            << data.observations.ticks() << ", seed=" << seed << "\n";
  return kOk;
}

// estimate -------------------------------------------------------------------

struct EstimateArgs {
  Common common;
  std::string observations;
  std::string traffic;
  std::string estimator = "mre_hipois";
  std::string out;
};

int cmd_estimate(const EstimateArgs& a) {
  const RunConfig config = load(a.common);
  const EstimatorTag tag = estimator_tag_from_string(a.estimator);
  const ObservationBundle bundle = observation_bundle_from_json(read_json_file(a.observations));
  std::optional<TrafficSeries> traffic;
  if (!a.traffic.empty()) {
    traffic = traffic_from_json(read_json_file(a.traffic));
    if (traffic->pair_count() != bundle.topology.pair_count() || traffic->ticks() != bundle.observations.ticks())
      throw ConfigError("traffic file does not match the observations");
  }
  const ObservationOperator op = build_operator(bundle.topology, bundle.scheme);
  const EstimatorSettings& settings = config.settings_for(tag);
  const EstimationInput input{op, bundle.observations, bundle.baseline, traffic ? &*traffic : nullptr};
  const EstimateReport report = run_estimator(tag, input, settings);
  write_json_file(a.out, with_seed(settings.seed, to_json(report)));
  std::cout << "estimate: " << to_string(tag) << " iterations=" << report.iterations
            << " lp_iterations=" << report.lp_iterations << " converged=" << (report.converged ? "yes" : "no") << "\n";
  return kOk;
}

// detect ---------------------------------------------------------------------

struct DetectArgs {
  Common common;
  std::string observations;
  std::string estimate;
  std::optional<double> threshold;
  std::string out;
};

int cmd_detect(const DetectArgs& a) {
  const RunConfig config = load(a.common);
  const ObservationBundle bundle = observation_bundle_from_json(read_json_file(a.observations));
  const EstimateReport report = estimate_report_from_json(read_json_file(a.estimate));
  if (report.lambda_hat.size() != bundle.baseline.size())
    throw ConfigError("estimate and observations cover different pair sets");
  double threshold = 0.0;
  Json calibration;
  if (a.threshold) {
    threshold = *a.threshold;
    calibration = Json{{"source", "flag"}};
  } else {
    const ObservationOperator op = build_operator(bundle.topology, bundle.scheme);
    const auto null = calibrate_null_threshold(op, bundle.baseline, static_cast<int>(bundle.observations.ticks()),
                                               config.settings_for(EstimatorTag::mre_hipois), config.detect.null_draws,
                                               config.detect.target_fpr, config.sim.seed, threads_of(a.common));
    threshold = null.threshold;
    calibration = Json{{"source", "null_simulation"},
                       {"draws", config.detect.null_draws},
                       {"failures", null.failures},
                       {"target_fpr", config.detect.target_fpr}};
  }
  const DetectionResult result = detect(report.lambda_hat, bundle.baseline, threshold, config.detect.edge_tol);
  Json doc = with_seed(config.sim.seed, to_json(result));
  doc["calibration"] = calibration;
  write_json_file(a.out, doc);
  std::cout << "detect: statistic=" << format_number(result.statistic) << " threshold=" << format_number(threshold)
            << " decision=" << (result.decision ? "anomalous" : "normal") << "\n";
  return kOk;
}

// study ----------------------------------------------------------------------

struct StudyArgs {
  Common common;
  std::string study;
  std::string out;
};

int cmd_study(const StudyArgs& a) {
  const RunConfig config = load(a.common);
  StudyKind kind;
  if (!a.study.empty())
    kind = study_kind_from_string(a.study);
  else if (config.study.study)
    kind = *config.study.study;
  else
    throw ConfigError("no study given (use --study or study.name)");
  const ExperimentSpec spec = make_experiment_spec(config, kind, threads_of(a.common));
  const StudyOutcome outcome = run_study(spec, a.out);
  std::cout << outcome.headline << "\n";
  if (outcome.failed > 0) std::cout << "failed trials: " << outcome.failed << " of " << outcome.attempted << "\n";
  return outcome.attempted > 0 && outcome.failed == outcome.attempted ? kComputation : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate estimation and diversion detection for node-monitored networks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw a network, its traffic, and the monitor readings");
  add_common(simulate, sim.common);
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--trial", sim.trial, "Trial index within the seed");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate SD-pair rates from monitor readings");
  add_common(estimate, est.common);
  estimate->add_option("--observations", est.observations, "observations.json from simulate")->required();
  estimate->add_option("--estimator", est.estimator, "oracle | poisson_mle | hipois | mre | mre_hipois");
  estimate->add_option("--traffic", est.traffic, "traffic.json (oracle only)");
  estimate->add_option("--out", est.out, "Report path")->required();

  DetectArgs det;
  auto* detect_cmd = app.add_subcommand("detect", "Compare an estimate with the baseline");
  add_common(detect_cmd, det.common);
  detect_cmd->add_option("--observations", det.observations, "observations.json (baseline and monitors)")->required();
  detect_cmd->add_option("--estimate", det.estimate, "Report from estimate")->required();
  detect_cmd->add_option("--threshold", det.threshold, "Decision threshold; calibrated on null simulations if omitted");
  detect_cmd->add_option("--out", det.out, "Result path")->required();

  StudyArgs stu;
  auto* study = app.add_subcommand("study", "Run a simulation study");
  add_common(study, stu.common);
  study->add_option("--study", stu.study, "mse_vs_edges | em_iterations | roc_over_T | single_instance");
  study->add_option("--out", stu.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*estimate) return cmd_estimate(est);
    if (*detect_cmd) return cmd_detect(det);
    if (*study) return cmd_study(stu);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ContractError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const ComputationError& e) {
    std::cerr << "computation failed: " << e.what() << "\n";
    return kComputation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kComputation;
  }
  return kOk;
}
