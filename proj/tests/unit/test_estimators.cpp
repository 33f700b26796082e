#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nettomo/error.hpp"
#include "nettomo/estimators.hpp"
#include "nettomo/experiments.hpp"
#include "oracles.hpp"

using namespace nettomo;

TEST(Prior, PosteriorModeMatchesGrid) {
  std::mt19937_64 gen(4242);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double ticks = 10 + 140 * unit(gen);
    const double total = ticks * 4.0 * unit(gen);
    const double base = unit(gen) < 0.2 ? 0.0 : 3.0 * unit(gen);
    const double eps = std::exp(std::log(1e-3) + unit(gen) * std::log(1e6));
    auto objective = [&](double lambda) {
      return total * std::log(lambda) - ticks * lambda + belief_log_prior(lambda, base, eps);
    };
    EXPECT_NEAR(posterior_mode(total, ticks, base, eps), oracle::grid_argmax(objective, 1e-9, 10.0), 1e-4);
  }
}

TEST(Prior, BeliefStepMatchesGrid) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = 1e-6, hi = 1e4;
  for (int i = 0; i < 200; ++i) {
    const double lambda = 1e-3 + 4.0 * unit(gen);
    const double base = unit(gen) < 0.1 ? 0.0 : 4.0 * unit(gen);
    auto g = [&](double log_eps) { return belief_log_prior(lambda, base, std::exp(log_eps)); };
    const double step = belief_step(lambda, base, lo, hi);
    ASSERT_GE(step, lo);
    ASSERT_LE(step, hi);
    const double grid = oracle::grid_argmax(g, std::log(lo), std::log(hi));
    EXPECT_LE(g(grid) - g(std::log(step)), 1e-9) << lambda << " " << base;
  }
}

// A zero rate has zero prior density unless the baseline is zero too.
TEST(Prior, BeliefStepAtZeroRate) {
  EXPECT_EQ(belief_step(0.0, 1.0, 1e-6, 1e4), 1e-6);
  EXPECT_EQ(belief_step(0.0, 0.0, 1e-6, 1e4), 1e4);
}

TEST(Prior, SharedBeliefMatchesGrid) {
  const std::vector<double> lambda{0.5, 1.2, 2.0, 0.1};
  const std::vector<double> base{0.7, 1.0, 2.5, 0.3};
  auto g = [&](double log_eps) {
    double s = 0.0;
    for (std::size_t p = 0; p < lambda.size(); ++p) s += belief_log_prior(lambda[p], base[p], std::exp(log_eps));
    return s;
  };
  const double step = shared_belief_step(lambda, base, 1e-6, 1e4);
  const double grid = oracle::grid_argmax(g, std::log(1e-6), std::log(1e4));
  EXPECT_LE(g(grid) - g(std::log(step)), 1e-9);
}

TEST(Prior, GammaDensity) {
  // Gamma(shape 1 + 2*1.5 = 4, rate 2) at 1.0: 2^4 e^-2 / 3!
  EXPECT_NEAR(belief_log_prior(1.0, 1.5, 2.0), std::log(16.0 * std::exp(-2.0) / 6.0), 1e-12);
}

namespace {

TrialData tiny_trial(std::uint64_t trial, int ticks) {
  SimConfig sim;
  sim.n_exterior = 3;
  sim.seed = 31;
  return make_trial(sim, SchemeConfig{}, trial, ticks);
}

}  // namespace

TEST(Em, ExactObjectiveNeverDecreases) {
  for (int trial = 0; trial < 6; ++trial) {
    const TrialData data = tiny_trial(static_cast<std::uint64_t>(trial), 8);
    EstimatorSettings settings;
    settings.estep = EStepEngine::exact;
    settings.n_restarts = 2;
    settings.em_max_iter = 300;
    for (auto tag : {EstimatorTag::poisson_mle, EstimatorTag::hipois, EstimatorTag::mre_hipois}) {
      const auto report = run_estimator(tag, {data.op, data.observations, data.truth.baseline, nullptr}, settings);
      ASSERT_EQ(report.objective_kind, "exact");
      for (std::size_t k = 1; k < report.objective_trace.size(); ++k)
        EXPECT_GE(report.objective_trace[k], report.objective_trace[k - 1] - 1e-9)
            << to_string(tag) << " trial " << trial << " iteration " << k;
    }
  }
}

TEST(Em, OracleIsSampleMean) {
  const TrialData data = tiny_trial(0, 20);
  const auto report = oracle_mle(data.traffic);
  for (std::size_t p = 0; p < data.traffic.pair_count(); ++p) {
    double s = 0.0;
    for (std::size_t t = 0; t < data.traffic.ticks(); ++t) s += static_cast<double>(data.traffic.at(t, p));
    EXPECT_DOUBLE_EQ(report.lambda_hat[p], s / 20.0);
  }
  EXPECT_THROW(run_estimator(EstimatorTag::oracle, {data.op, data.observations, data.truth.baseline, nullptr}, {}),
               ConfigError);
}

TEST(Em, FullyObservedPoissonMleIsSampleMean) {
  SimConfig sim;
  sim.n_exterior = 4;
  SchemeConfig scheme;
  scheme.observed_fraction = 1.0;
  const TrialData data = make_trial(sim, scheme, 2, 30);
  const auto oracle = oracle_mle(data.traffic);
  const auto pm = run_estimator(EstimatorTag::poisson_mle, {data.op, data.observations, data.truth.baseline, nullptr}, {});
  const auto mre = run_estimator(EstimatorTag::mre, {data.op, data.observations, data.truth.baseline, nullptr}, {});
  for (std::size_t p = 0; p < oracle.lambda_hat.size(); ++p) {
    EXPECT_NEAR(pm.lambda_hat[p], oracle.lambda_hat[p], 1e-6);
    EXPECT_NEAR(mre.lambda_hat[p], oracle.lambda_hat[p], 1e-6);
  }
}

// Fully observed, the hierarchical estimate shrinks the sample mean toward the
// baseline: it lies between the two.
TEST(Em, FullyObservedHipoisShrinksTowardBaseline) {
  SimConfig sim;
  sim.n_exterior = 4;
  SchemeConfig scheme;
  scheme.observed_fraction = 1.0;
  const TrialData data = make_trial(sim, scheme, 3, 50);
  const auto oracle = oracle_mle(data.traffic);
  const EstimationInput input{data.op, data.observations, data.truth.baseline, nullptr};
  for (auto tag : {EstimatorTag::hipois, EstimatorTag::mre_hipois}) {
    const auto report = run_estimator(tag, input, {});
    for (std::size_t p = 0; p < oracle.lambda_hat.size(); ++p) {
      const double lo = std::min(oracle.lambda_hat[p], data.truth.baseline[p]);
      const double hi = std::max(oracle.lambda_hat[p], data.truth.baseline[p]);
      EXPECT_GE(report.lambda_hat[p], lo - 1e-4) << to_string(tag) << " pair " << p;
      EXPECT_LE(report.lambda_hat[p], hi + 1e-4) << to_string(tag) << " pair " << p;
    }
  }
}

TEST(Em, MreFitsMeanObservations) {
  const TrialData data = tiny_trial(1, 40);
  const auto report = mre_estimate(data.observations, data.op, data.truth.baseline, {});
  const auto fitted = expected_observations(data.op, report.lambda_hat);
  const auto mean = data.observations.mean();
  for (std::size_t r = 0; r < mean.size(); ++r) EXPECT_NEAR(fitted[r], mean[r], 1e-6);
  EXPECT_GT(report.lp_iterations, 0);
  EXPECT_EQ(report.objective_kind, "l1");
}

TEST(Em, DeterministicForSeed) {
  const TrialData data = tiny_trial(4, 30);
  EstimatorSettings settings;
  settings.seed = 77;
  const EstimationInput input{data.op, data.observations, data.truth.baseline, nullptr};
  const auto a = run_estimator(EstimatorTag::hipois, input, settings);
  const auto b = run_estimator(EstimatorTag::hipois, input, settings);
  EXPECT_EQ(a.lambda_hat, b.lambda_hat);
  EXPECT_EQ(a.restart_iterations, b.restart_iterations);
  EXPECT_EQ(a.restart_iterations.size(), static_cast<std::size_t>(settings.n_restarts));
}

TEST(Em, MreHipoisConvergesNearMre) {
  const TrialData data = tiny_trial(5, 100);
  const EstimationInput input{data.op, data.observations, data.truth.baseline, nullptr};
  const auto report = run_estimator(EstimatorTag::mre_hipois, input, {});
  EXPECT_TRUE(report.converged);
  EXPECT_EQ(report.epsilon_hat.size(), data.truth.baseline.size());
  for (double v : report.lambda_hat.values()) EXPECT_GE(v, 0.0);
}

TEST(Settings, Validation) {
  EstimatorSettings s;
  s.em_tol = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = {};
  s.epsilon_min = 10.0;
  s.epsilon_max = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(estimator_tag_from_string("nope"), ConfigError);
  EXPECT_EQ(estimator_tag_from_string("mre_hipois"), EstimatorTag::mre_hipois);
}
