#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nettomo/estep.hpp"
#include "nettomo/lp.hpp"
#include "nettomo/observation.hpp"
#include "nettomo/topology.hpp"

namespace nettomo {

enum class EstimatorTag { oracle, poisson_mle, hipois, mre, mre_hipois };
enum class InitMode { random, baseline, mre };
enum class EStepEngine { ipf, exact };

std::string to_string(EstimatorTag tag);
std::string to_string(InitMode mode);
std::string to_string(EStepEngine engine);
EstimatorTag estimator_tag_from_string(const std::string& name);
InitMode init_mode_from_string(const std::string& name);
EStepEngine estep_engine_from_string(const std::string& name);

struct EstimatorSettings {
  double em_tol = 1e-5;  // on max |lambda^k - lambda^(k-1)|
  int em_max_iter = 2000;
  int n_restarts = 5;
  InitMode init_mode = InitMode::random;
  /// Support of the uniform hyperprior on the belief parameter.
  double epsilon_min = 1e-6;
  double epsilon_max = 1e4;
  bool shared_epsilon = false;
  EStepEngine estep = EStepEngine::ipf;
  IpfOptions ipf{};
  ExactOptions exact{};
  LpOptions lp{};
  std::uint64_t seed = 1;

  void validate() const;
};

struct EstimateReport {
  EstimatorTag estimator = EstimatorTag::oracle;
  RateMatrix lambda_hat;
  std::vector<double> epsilon_hat;  // hierarchical estimators only
  int iterations = 0;               // EM iterations of the selected run
  int lp_iterations = 0;            // interior-point iterations (MRE stages)
  bool converged = true;
  /// EM: objective of each iterate, last entry belongs to lambda_hat.
  std::vector<double> objective_trace;
  /// "exact" (observed-data log posterior), "surrogate" (complete-data value
  /// at the E-step expectations), "l1" (MRE distance) or "none".
  std::string objective_kind = "none";
  int restart = 0;
  std::vector<int> restart_iterations;
  std::vector<double> restart_objectives;
  long estep_nonconverged = 0;  // ipf solves that stopped at max_iter
  double lp_objective = 0.0;
};

/// What an estimator may see. `traffic` is only available in simulation.
struct EstimationInput {
  const ObservationOperator& op;
  const ObservationSeries& observations;
  const RateMatrix& baseline;
  const TrafficSeries* traffic = nullptr;
};

/// Sample mean of fully visible traffic.
EstimateReport oracle_mle(const TrafficSeries& traffic);

/// EM without a prior: lambda^k = S / T, best of n_restarts random starts.
EstimateReport poisson_mle_em(const ObservationSeries& observations, const ObservationOperator& op,
                              const EstimatorSettings& settings);

/// Hierarchical gamma-Poisson EM with per-pair belief parameters. Starts are
/// chosen by settings.init_mode (random starts use n_restarts).
EstimateReport hipois_em(const ObservationSeries& observations, const ObservationOperator& op,
                         const RateMatrix& baseline, const EstimatorSettings& settings);

/// Same, from one explicit starting point.
EstimateReport hipois_em_from(const ObservationSeries& observations, const ObservationOperator& op,
                              const RateMatrix& baseline, std::span<const double> init,
                              const EstimatorSettings& settings);

/// L1-closest nonnegative rates to the baseline matching the mean observations.
EstimateReport mre_estimate(const ObservationSeries& observations, const ObservationOperator& op,
                            const RateMatrix& baseline, const EstimatorSettings& settings);

/// hipois_em started once at the MRE solution.
EstimateReport mre_hipois(const ObservationSeries& observations, const ObservationOperator& op,
                          const RateMatrix& baseline, const EstimatorSettings& settings);

EstimateReport run_estimator(EstimatorTag tag, const EstimationInput& input, const EstimatorSettings& settings);

// Building blocks, exposed for tests.

/// Gamma(shape = 1 + eps * base, rate = eps) log density at lambda.
double belief_log_prior(double lambda, double base, double epsilon);

/// argmax over [eps_min, eps_max] of belief_log_prior(lambda, base, .).
double belief_step(double lambda, double base, double eps_min, double eps_max);

/// Single epsilon maximising the summed log prior over all pairs.
double shared_belief_step(std::span<const double> lambda, std::span<const double> base, double eps_min,
                          double eps_max);

/// Posterior mode (S + eps * base) / (T + eps) of the rate given expected counts S over T ticks.
inline double posterior_mode(double expected_total, double ticks, double base, double epsilon) {
  return (expected_total + epsilon * base) / (ticks + epsilon);
}

}  // namespace nettomo
