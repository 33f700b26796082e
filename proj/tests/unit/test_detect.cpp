#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nettomo/detect.hpp"
#include "nettomo/error.hpp"

using namespace nettomo;

TEST(Detect, FrobeniusAndTriangle) {
  EXPECT_DOUBLE_EQ(frobenius_divergence(RateMatrix({3.0, 0.0}), RateMatrix({0.0, 4.0})), 5.0);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(10), b(10), c(10);
    for (int k = 0; k < 10; ++k) {
      a[k] = std::abs(normal(gen));
      b[k] = std::abs(normal(gen));
      c[k] = std::abs(normal(gen));
    }
    const RateMatrix ra(a), rb(b), rc(c);
    EXPECT_LE(frobenius_divergence(ra, rc), frobenius_divergence(ra, rb) + frobenius_divergence(rb, rc) + 1e-12);
    EXPECT_DOUBLE_EQ(frobenius_divergence(ra, rb), frobenius_divergence(rb, ra));
  }
}

TEST(Detect, CalibrationBoundsFalsePositives) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int n = 20 + static_cast<int>(gen() % 300);
    std::vector<double> null(n);
    for (auto& v : null) v = std::round(normal(gen) * 3.0) / 3.0;
    const double fpr = 0.01 + 0.3 * static_cast<double>(gen() % 1000) / 1000.0;
    const double tau = calibrate_threshold(null, fpr);
    const auto exceed = std::count_if(null.begin(), null.end(), [&](double v) { return v > tau; });
    EXPECT_LE(static_cast<double>(exceed) / n, fpr);
  }
  std::vector<double> few(10, 1.0);
  EXPECT_THROW(calibrate_threshold(few, 0.05), ContractError);
}

TEST(Detect, QuantileConvention) {
  std::vector<double> v(21);
  for (int i = 0; i < 21; ++i) v[i] = 20 - i;
  // ceil(0.95 * 20) = 19
  EXPECT_EQ(calibrate_threshold(v, 0.05), 19.0);
  EXPECT_EQ(calibrate_threshold(v, 0.5), 10.0);
}

TEST(Roc, MonotoneWithTies) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const int n = 10 + static_cast<int>(gen() % 100);
    std::vector<double> stats(n);
    std::vector<bool> labels(n);
    for (int k = 0; k < n; ++k) {
      labels[k] = k % 3 == 0;
      stats[k] = std::round((normal(gen) + (labels[k] ? 1.0 : 0.0)) * 2.0) / 2.0;
    }
    const RocCurve roc = roc_curve(stats, labels);
    ASSERT_GE(roc.points.size(), 2u);
    EXPECT_EQ(roc.points.front().fpr, 0.0);
    EXPECT_EQ(roc.points.front().tpr, 0.0);
    EXPECT_EQ(roc.points.back().fpr, 1.0);
    EXPECT_EQ(roc.points.back().tpr, 1.0);
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
      EXPECT_GE(roc.points[k].fpr, roc.points[k - 1].fpr);
      EXPECT_GE(roc.points[k].tpr, roc.points[k - 1].tpr);
    }
    EXPECT_GE(roc.auc, 0.0);
    EXPECT_LE(roc.auc, 1.0);
  }
}

// Trapezoidal AUC equals the Mann-Whitney statistic with ties counted half.
TEST(Roc, AucIsMannWhitney) {
  const std::vector<double> stats{0.1, 0.4, 0.35, 0.8, 0.4, 0.2};
  const std::vector<bool> labels{false, true, false, true, false, true};
  double wins = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < stats.size(); ++i)
    for (std::size_t j = 0; j < stats.size(); ++j)
      if (labels[i] && !labels[j]) {
        wins += stats[i] > stats[j] ? 1.0 : stats[i] == stats[j] ? 0.5 : 0.0;
        ++pairs;
      }
  EXPECT_NEAR(roc_curve(stats, labels).auc, wins / pairs, 1e-15);
  EXPECT_THROW(roc_curve(stats, std::vector<bool>(6, true)), ContractError);
}

TEST(Detect, EdgeLabels) {
  const RateMatrix base({0.0, 1.0, 1.0, 1.0, 0.0});
  const RateMatrix est({0.5, 0.05, 1.5, 1.05, 0.05});
  const auto f = classify_edges(est, base, 0.1);
  EXPECT_EQ(f[0].label, EdgeLabel::new_edge);
  EXPECT_EQ(f[1].label, EdgeLabel::missing);
  EXPECT_EQ(f[2].label, EdgeLabel::changed);
  EXPECT_EQ(f[3].label, EdgeLabel::normal);
  EXPECT_EQ(f[4].label, EdgeLabel::normal);
  EXPECT_DOUBLE_EQ(f[2].change, 0.5);

  const auto r = detect(est, base, 0.5);
  EXPECT_TRUE(r.decision);
  EXPECT_FALSE(detect(est, base, 10.0).decision);
}
