#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "nettomo/rng.hpp"
#include "nettomo/simgen.hpp"

using namespace nettomo;

TEST(Rng, SubstreamsAreIndependentAndRepeatable) {
  auto a = CounterRng::substream(1, Stream::traffic, 0);
  auto b = CounterRng::substream(1, Stream::traffic, 0);
  auto c = CounterRng::substream(1, Stream::traffic, 1);
  auto d = CounterRng::substream(1, Stream::rates, 0);
  const auto a0 = a();
  EXPECT_EQ(a0, b());
  EXPECT_NE(a0, c());
  EXPECT_NE(a0, d());
}

TEST(Rng, UniformMoments) {
  auto rng = CounterRng::substream(5, Stream::traffic);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 3 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 0.002);
}

TEST(Simgen, DeterministicPerTrial) {
  SimConfig cfg;
  EXPECT_EQ(gen_ground_truth(cfg, 3), gen_ground_truth(cfg, 3));
  EXPECT_NE(gen_ground_truth(cfg, 3), gen_ground_truth(cfg, 4));
}

// Pooled over many trials, each statistic lands within three standard errors.
TEST(Simgen, GroundTruthStatistics) {
  SimConfig cfg;
  const int trials = 400;
  long long pairs = 0, support = 0, diverted = 0, missing = 0;
  double rate_sum = 0.0, rate_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const GroundTruth g = gen_ground_truth(cfg, t);
    for (std::size_t p = 0; p < g.baseline.size(); ++p) {
      ++pairs;
      if (g.baseline[p] > 0) {
        ++support;
        rate_sum += g.baseline[p];
        rate_sq += g.baseline[p] * g.baseline[p];
      }
      if (g.labels[p] != DiversionLabel::none) ++diverted;
      if (g.labels[p] == DiversionLabel::missing) {
        ++missing;
        EXPECT_EQ(g.truth[p], 0.0);
        EXPECT_GT(g.baseline[p], 0.0);
      }
      if (g.labels[p] == DiversionLabel::none) EXPECT_EQ(g.truth[p], g.baseline[p]);
      if (g.labels[p] == DiversionLabel::new_edge) EXPECT_EQ(g.baseline[p], 0.0);
      if (g.labels[p] == DiversionLabel::increased) EXPECT_GT(g.truth[p], g.baseline[p]);
    }
  }
  const double p_edge = static_cast<double>(support) / pairs;
  EXPECT_NEAR(p_edge, cfg.p_edge, 3 * std::sqrt(cfg.p_edge * (1 - cfg.p_edge) / pairs));
  const double p_div = static_cast<double>(diverted) / pairs;
  EXPECT_NEAR(p_div, cfg.p_diversion, 3 * std::sqrt(cfg.p_diversion * (1 - cfg.p_diversion) / pairs));
  // Gamma(1.75, 1): mean 1.75, variance 1.75.
  const double mean = rate_sum / support;
  EXPECT_NEAR(mean, 1.75, 3 * std::sqrt(1.75 / support));
  EXPECT_NEAR(rate_sq / support - mean * mean, 1.75, 0.1);
  EXPECT_GT(missing, 0);
}

TEST(Simgen, PoissonTrafficMoments) {
  const RateMatrix rates(std::vector<double>{0.0, 0.5, 3.0});
  auto rng = CounterRng::substream(9, Stream::traffic);
  const int ticks = 50000;
  const TrafficSeries traffic = sample_traffic(rates, ticks, rng);
  for (std::size_t p = 0; p < 3; ++p) {
    double sum = 0.0, sq = 0.0;
    for (int t = 0; t < ticks; ++t) {
      const double v = static_cast<double>(traffic.at(t, p));
      sum += v;
      sq += v * v;
    }
    const double mean = sum / ticks;
    const double lambda = rates[p];
    EXPECT_NEAR(mean, lambda, 3 * std::sqrt(std::max(lambda, 1e-12) / ticks) + 1e-12);
    EXPECT_NEAR(sq / ticks - mean * mean, lambda, 0.05 * lambda + 1e-12);
  }
}

TEST(Simgen, MakeGroundTruthLabels) {
  const Topology top = Topology::complete(2);
  const GroundTruth g = make_ground_truth(top, RateMatrix({1.0, 0.0}), RateMatrix({0.0, 2.0}));
  EXPECT_EQ(g.labels[0], DiversionLabel::missing);
  EXPECT_EQ(g.labels[1], DiversionLabel::new_edge);
}
