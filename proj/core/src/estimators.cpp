#include "nettomo/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "nettomo/error.hpp"
#include "nettomo/rng.hpp"

namespace nettomo {

std::string to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::oracle: return "oracle";
    case EstimatorTag::poisson_mle: return "poisson_mle";
    case EstimatorTag::hipois: return "hipois";
    case EstimatorTag::mre: return "mre";
    case EstimatorTag::mre_hipois: return "mre_hipois";
  }
  return "unknown";
}

std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::random: return "random";
    case InitMode::baseline: return "baseline";
    case InitMode::mre: return "mre";
  }
  return "unknown";
}

std::string to_string(EStepEngine engine) { return engine == EStepEngine::exact ? "exact" : "ipf"; }

EstimatorTag estimator_tag_from_string(const std::string& name) {
  for (auto tag : {EstimatorTag::oracle, EstimatorTag::poisson_mle, EstimatorTag::hipois, EstimatorTag::mre,
                   EstimatorTag::mre_hipois})
    if (to_string(tag) == name) return tag;
  throw ConfigError("unknown estimator '" + name + "'");
}

InitMode init_mode_from_string(const std::string& name) {
  for (auto mode : {InitMode::random, InitMode::baseline, InitMode::mre})
    if (to_string(mode) == name) return mode;
  throw ConfigError("unknown init_mode '" + name + "'");
}

EStepEngine estep_engine_from_string(const std::string& name) {
  if (name == "ipf") return EStepEngine::ipf;
  if (name == "exact") return EStepEngine::exact;
  throw ConfigError("unknown estep engine '" + name + "'");
}

void EstimatorSettings::validate() const {
  if (!(em_tol > 0.0)) throw ConfigError("em_tol must be positive");
  if (em_max_iter < 1) throw ConfigError("em_max_iter must be at least 1");
  if (n_restarts < 1) throw ConfigError("n_restarts must be at least 1");
  if (!(epsilon_min > 0.0)) throw ConfigError("epsilon_min must be positive");
  if (!(epsilon_max >= epsilon_min) || !std::isfinite(epsilon_max))
    throw ConfigError("epsilon_max must be finite and at least epsilon_min");
  if (!(ipf.tol > 0.0) || ipf.max_iter < 1) throw ConfigError("ipf tolerance and iteration cap must be positive");
  if (ipf.newton_after < 0) throw ConfigError("ipf.newton_after must be nonnegative");
  if (!(lp.tol > 0.0) || lp.max_iter < 1) throw ConfigError("lp tolerance and iteration cap must be positive");
}

// ---------------------------------------------------------------------------
// Belief parameter.

double belief_log_prior(double lambda, double base, double epsilon) {
  const double excess = epsilon * base;  // shape - 1
  double value = (1.0 + excess) * std::log(epsilon) - epsilon * lambda - std::lgamma(1.0 + excess);
  if (excess > 0.0) value += excess * std::log(lambda);
  return value;
}

namespace {

// d/d eps of belief_log_prior; strictly decreasing in eps.
double belief_slope(double lambda, double base, double epsilon) {
  if (base == 0.0) return 1.0 / epsilon - lambda;
  return base * std::log(lambda) - lambda + base * std::log(epsilon) + 1.0 / epsilon + base -
         base * boost::math::digamma(1.0 + epsilon * base);
}

template <class Slope>
double maximize_concave(Slope slope, double eps_min, double eps_max) {
  if (eps_min == eps_max) return eps_min;
  if (slope(eps_max) >= 0.0) return eps_max;
  if (slope(eps_min) <= 0.0) return eps_min;
  // Root of the slope in log(eps).
  auto in_log = [&](double u) { return slope(std::exp(u)); };
  std::uintmax_t max_iter = 100;
  boost::math::tools::eps_tolerance<double> tolerance(45);
  const auto [lo, hi] = boost::math::tools::toms748_solve(in_log, std::log(eps_min), std::log(eps_max),
                                                          in_log(std::log(eps_min)), in_log(std::log(eps_max)),
                                                          tolerance, max_iter);
  return std::clamp(std::exp(0.5 * (lo + hi)), eps_min, eps_max);
}

}  // namespace

double belief_step(double lambda, double base, double eps_min, double eps_max) {
  if (base > 0.0 && !(lambda > 0.0)) return eps_min;
  if (base == 0.0 && !(lambda > 0.0)) return eps_max;
  return maximize_concave([&](double eps) { return belief_slope(lambda, base, eps); }, eps_min, eps_max);
}

double shared_belief_step(std::span<const double> lambda, std::span<const double> base, double eps_min,
                          double eps_max) {
  if (lambda.size() != base.size()) throw ContractError("rate and baseline lengths differ");
  for (std::size_t p = 0; p < lambda.size(); ++p)
    if (base[p] > 0.0 && !(lambda[p] > 0.0)) return eps_min;
  return maximize_concave(
      [&](double eps) {
        double total = 0.0;
        for (std::size_t p = 0; p < lambda.size(); ++p) total += belief_slope(lambda[p], base[p], eps);
        return total;
      },
      eps_min, eps_max);
}

// ---------------------------------------------------------------------------
// EM core.

namespace {

struct EmRun {
  std::vector<double> lambda;
  std::vector<double> epsilon;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
  bool exact_objective = false;
  long estep_nonconverged = 0;
  std::vector<double> duals;  // ipf warm start, one block of rows per tick
};

void check_input(const ObservationSeries& observations, const ObservationOperator& op) {
  if (observations.rows() != op.rows()) throw ContractError("observation rows do not match the operator");
  if (observations.ticks() == 0) throw ContractError("observations need at least one tick");
  if (op.row_count() == 0) throw ContractError("estimation needs at least one observation row");
}

class EmSolver {
 public:
  EmSolver(const ObservationSeries& observations, const ObservationOperator& op, const RateMatrix* baseline,
           const EstimatorSettings& settings)
      : obs_(observations), op_(op), baseline_(baseline), settings_(settings) {
    check_input(observations, op);
    if (baseline_ && baseline_->size() != op.pair_count()) throw ContractError("baseline does not match operator");
    const std::size_t rows = op.row_count();
    y_double_.resize(observations.ticks() * rows);
    auto flat = observations.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) y_double_[i] = static_cast<double>(flat[i]);
  }

  EmRun run(std::span<const double> init) const {
    const std::size_t pairs = op_.pair_count();
    if (init.size() != pairs) throw ContractError("initial rates do not match operator");
    const double ticks = static_cast<double>(obs_.ticks());

    EmRun run;
    run.exact_objective = settings_.estep == EStepEngine::exact;
    std::vector<double> lambda(init.begin(), init.end());
    for (double& v : lambda) v = std::max(v, baseline_ ? settings_.ipf.rate_floor : 0.0);
    std::vector<double> epsilon;
    if (baseline_) epsilon = belief(lambda);

    std::vector<double> totals(pairs);
    std::vector<double> next(pairs);
    for (int k = 1; k <= settings_.em_max_iter; ++k) {
      const double loglik = expectation(lambda, totals, run);
      run.trace.push_back(loglik + log_prior(lambda, epsilon));

      if (baseline_) {
        epsilon = belief(lambda);
        for (std::size_t p = 0; p < pairs; ++p)
          next[p] = posterior_mode(totals[p], ticks, (*baseline_)[p], epsilon[p]);
      } else {
        for (std::size_t p = 0; p < pairs; ++p) next[p] = totals[p] / ticks;
      }
      double change = 0.0;
      for (std::size_t p = 0; p < pairs; ++p) change = std::max(change, std::abs(next[p] - lambda[p]));
      lambda.swap(next);
      run.iterations = k;
      if (change <= settings_.em_tol) {
        run.converged = true;
        break;
      }
    }
    const double final_loglik = expectation(lambda, totals, run);
    run.trace.push_back(final_loglik + log_prior(lambda, epsilon));
    run.lambda = std::move(lambda);
    run.epsilon = std::move(epsilon);
    return run;
  }

 private:
  std::vector<double> belief(std::span<const double> lambda) const {
    const auto base = baseline_->values();
    const std::size_t pairs = lambda.size();
    if (settings_.shared_epsilon)
      return std::vector<double>(pairs,
                                 shared_belief_step(lambda, base, settings_.epsilon_min, settings_.epsilon_max));
    std::vector<double> out(pairs);
    for (std::size_t p = 0; p < pairs; ++p)
      out[p] = belief_step(lambda[p], base[p], settings_.epsilon_min, settings_.epsilon_max);
    return out;
  }

  double log_prior(std::span<const double> lambda, std::span<const double> epsilon) const {
    if (!baseline_) return 0.0;
    double total = 0.0;
    for (std::size_t p = 0; p < lambda.size(); ++p) total += belief_log_prior(lambda[p], (*baseline_)[p], epsilon[p]);
    return total;
  }

  // Fills per-pair expected totals S and returns the log-likelihood value
  // that goes into the objective (exact or surrogate).
  double expectation(std::span<const double> lambda, std::vector<double>& totals, EmRun& run) const {
    std::fill(totals.begin(), totals.end(), 0.0);
    const std::size_t rows = op_.row_count();
    const std::size_t pairs = op_.pair_count();
    double loglik = 0.0;
    for (std::size_t t = 0; t < obs_.ticks(); ++t) {
      EStepResult step;
      bool exact = false;
      if (settings_.estep == EStepEngine::exact) {
        try {
          step = estep_exact(op_, lambda, obs_.tick(t), settings_.exact);
          exact = true;
        } catch (const BudgetError&) {
          run.exact_objective = false;
        }
      }
      if (!exact) {
        if (run.duals.empty()) run.duals.assign(obs_.ticks() * rows, 0.0);
        step = estep_ipf(op_, lambda, std::span<const double>(y_double_).subspan(t * rows, rows), settings_.ipf,
                         std::span<double>(run.duals).subspan(t * rows, rows));
        if (!step.converged) ++run.estep_nonconverged;
      }
      for (std::size_t p = 0; p < pairs; ++p) totals[p] += step.expected[p];
      if (exact) {
        loglik += step.log_likelihood;
      } else {
        for (std::size_t p = 0; p < pairs; ++p) {
          const double x = step.expected[p];
          const double rate = std::max(lambda[p], settings_.ipf.rate_floor);
          loglik += (x > 0.0 ? x * std::log(rate) : 0.0) - rate - std::lgamma(x + 1.0);
        }
      }
    }
    return loglik;
  }

  const ObservationSeries& obs_;
  const ObservationOperator& op_;
  const RateMatrix* baseline_;
  const EstimatorSettings& settings_;
  std::vector<double> y_double_;
};

std::vector<double> random_init(std::size_t pairs, std::uint64_t seed, int restart) {
  auto rng = CounterRng::substream(seed, Stream::estimator_init, static_cast<std::uint64_t>(restart));
  std::gamma_distribution<double> draw(1.0, 1.0);
  std::vector<double> init(pairs);
  for (double& v : init) v = draw(rng);
  return init;
}

EstimateReport to_report(EstimatorTag tag, EmRun run) {
  EstimateReport report;
  report.estimator = tag;
  report.lambda_hat = RateMatrix(std::move(run.lambda));
  report.epsilon_hat = std::move(run.epsilon);
  report.iterations = run.iterations;
  report.converged = run.converged;
  report.objective_trace = std::move(run.trace);
  report.objective_kind = run.exact_objective ? "exact" : "surrogate";
  report.estep_nonconverged = run.estep_nonconverged;
  return report;
}

// Runs every random restart and keeps the best final objective; ties go to
// the lower restart index.
EstimateReport best_of_restarts(EstimatorTag tag, const EmSolver& solver, std::size_t pairs,
                                const EstimatorSettings& settings) {
  std::optional<EmRun> best;
  int best_index = 0;
  std::vector<int> iterations;
  std::vector<double> objectives;
  long nonconverged = 0;
  for (int r = 0; r < settings.n_restarts; ++r) {
    EmRun run = solver.run(random_init(pairs, settings.seed, r));
    iterations.push_back(run.iterations);
    objectives.push_back(run.trace.back());
    nonconverged += run.estep_nonconverged;
    if (!best || run.trace.back() > best->trace.back()) {
      best = std::move(run);
      best_index = r;
    }
  }
  EstimateReport report = to_report(tag, std::move(*best));
  report.restart = best_index;
  report.restart_iterations = std::move(iterations);
  report.restart_objectives = std::move(objectives);
  report.estep_nonconverged = nonconverged;
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------
// Estimators.

EstimateReport oracle_mle(const TrafficSeries& traffic) {
  if (traffic.ticks() == 0) throw ContractError("oracle needs at least one tick of traffic");
  std::vector<double> totals(traffic.pair_count(), 0.0);
  for (std::size_t t = 0; t < traffic.ticks(); ++t) {
    auto counts = traffic.tick(t);
    for (std::size_t p = 0; p < counts.size(); ++p) totals[p] += static_cast<double>(counts[p]);
  }
  for (double& v : totals) v /= static_cast<double>(traffic.ticks());
  EstimateReport report;
  report.estimator = EstimatorTag::oracle;
  report.lambda_hat = RateMatrix(std::move(totals));
  return report;
}

EstimateReport poisson_mle_em(const ObservationSeries& observations, const ObservationOperator& op,
                              const EstimatorSettings& settings) {
  settings.validate();
  EmSolver solver(observations, op, nullptr, settings);
  return best_of_restarts(EstimatorTag::poisson_mle, solver, op.pair_count(), settings);
}

EstimateReport hipois_em_from(const ObservationSeries& observations, const ObservationOperator& op,
                              const RateMatrix& baseline, std::span<const double> init,
                              const EstimatorSettings& settings) {
  settings.validate();
  EmSolver solver(observations, op, &baseline, settings);
  EstimateReport report = to_report(EstimatorTag::hipois, solver.run(init));
  report.restart_iterations = {report.iterations};
  report.restart_objectives = {report.objective_trace.back()};
  return report;
}

EstimateReport hipois_em(const ObservationSeries& observations, const ObservationOperator& op,
                         const RateMatrix& baseline, const EstimatorSettings& settings) {
  settings.validate();
  switch (settings.init_mode) {
    case InitMode::baseline:
      return hipois_em_from(observations, op, baseline, baseline.values(), settings);
    case InitMode::mre: {
      EstimateReport report = mre_hipois(observations, op, baseline, settings);
      report.estimator = EstimatorTag::hipois;
      return report;
    }
    case InitMode::random: break;
  }
  EmSolver solver(observations, op, &baseline, settings);
  return best_of_restarts(EstimatorTag::hipois, solver, op.pair_count(), settings);
}

EstimateReport mre_estimate(const ObservationSeries& observations, const ObservationOperator& op,
                            const RateMatrix& baseline, const EstimatorSettings& settings) {
  settings.validate();
  check_input(observations, op);
  const std::vector<double> y_bar = observations.mean();
  const LinearProgram lp = build_l1_projection_lp(baseline, op, y_bar);
  const LpResult solution = lp_solve(lp, settings.lp);
  if (solution.status == LpStatus::infeasible)
    throw InfeasibleError("L1 projection is infeasible: mean observations are inconsistent with the operator");
  if (solution.status == LpStatus::unbounded) throw ComputationError("L1 projection reported an unbounded objective");

  EstimateReport report;
  report.estimator = EstimatorTag::mre;
  report.lambda_hat = RateMatrix(l1_projection_rates(solution, op.pair_count()));
  report.iterations = solution.iterations;
  report.lp_iterations = solution.iterations + solution.phase1_iterations;
  report.converged = solution.status == LpStatus::optimal;
  report.lp_objective = solution.objective;
  report.objective_kind = "l1";
  report.objective_trace = {solution.objective};
  return report;
}

EstimateReport mre_hipois(const ObservationSeries& observations, const ObservationOperator& op,
                          const RateMatrix& baseline, const EstimatorSettings& settings) {
  const EstimateReport start = mre_estimate(observations, op, baseline, settings);
  EstimateReport report = hipois_em_from(observations, op, baseline, start.lambda_hat.values(), settings);
  report.estimator = EstimatorTag::mre_hipois;
  report.lp_iterations = start.lp_iterations;
  report.lp_objective = start.lp_objective;
  report.converged = report.converged && start.converged;
  return report;
}

EstimateReport run_estimator(EstimatorTag tag, const EstimationInput& input, const EstimatorSettings& settings) {
  switch (tag) {
    case EstimatorTag::oracle:
      if (!input.traffic) throw ConfigError("the oracle estimator needs the full traffic series");
      return oracle_mle(*input.traffic);
    case EstimatorTag::poisson_mle: return poisson_mle_em(input.observations, input.op, settings);
    case EstimatorTag::hipois: return hipois_em(input.observations, input.op, input.baseline, settings);
    case EstimatorTag::mre: return mre_estimate(input.observations, input.op, input.baseline, settings);
    case EstimatorTag::mre_hipois: return mre_hipois(input.observations, input.op, input.baseline, settings);
  }
  throw ContractError("unknown estimator tag");
}

}  // namespace nettomo
