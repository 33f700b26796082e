#pragma once

// Slow, obviously-correct reference implementations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "nettomo/lp.hpp"
#include "nettomo/observation.hpp"

namespace nettomo::oracle {

struct BruteForceEStep {
  std::vector<double> expected;
  double log_likelihood = 0.0;  // log P(A N = y)
  std::uint64_t tables = 0;
};

/// Sums the Poisson pmf over every table with 0 <= x_p <= (smallest row
/// value covering p), keeping those with A x = y. No logs, no pruning.
inline BruteForceEStep brute_force_estep(const ObservationOperator& op, const std::vector<double>& rates,
                                         const std::vector<long long>& y) {
  const std::size_t n = op.pair_count();
  std::vector<long long> cap(n, 0);
  std::vector<bool> covered(n, false);
  for (std::size_t p = 0; p < n; ++p) {
    long long c = std::numeric_limits<long long>::max();
    for (std::size_t r = 0; r < op.row_count(); ++r)
      if (op.entry(r, p)) {
        c = std::min(c, y[r]);
        covered[p] = true;
      }
    cap[p] = covered[p] ? c : 0;
  }
  auto pmf = [](double lambda, long long k) -> long double {
    if (lambda == 0.0) return k == 0 ? 1.0L : 0.0L;
    long double v = std::exp(-static_cast<long double>(lambda));
    for (long long i = 1; i <= k; ++i) v *= static_cast<long double>(lambda) / static_cast<long double>(i);
    return v;
  };

  std::vector<long long> x(n, 0);
  long double total = 0.0L;
  std::vector<long double> weighted(n, 0.0L);
  BruteForceEStep out;
  while (true) {
    bool ok = true;
    for (std::size_t r = 0; r < op.row_count() && ok; ++r) {
      long long s = 0;
      for (std::size_t p = 0; p < n; ++p) s += op.entry(r, p) * x[p];
      ok = s == y[r];
    }
    if (ok) {
      long double w = 1.0L;
      for (std::size_t p = 0; p < n; ++p)
        if (covered[p]) w *= pmf(rates[p], x[p]);
      total += w;
      for (std::size_t p = 0; p < n; ++p) weighted[p] += w * static_cast<long double>(x[p]);
      ++out.tables;
    }
    std::size_t p = 0;
    while (p < n && x[p] == cap[p]) x[p++] = 0;
    if (p == n) break;
    ++x[p];
  }
  out.expected.resize(n);
  for (std::size_t p = 0; p < n; ++p)
    out.expected[p] = covered[p] ? static_cast<double>(weighted[p] / total) : rates[p];
  out.log_likelihood = static_cast<double>(std::log(total));
  return out;
}

struct VertexLp {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x;
};

/// Minimum of c^T x over every basic feasible solution of {A x = b, x >= 0}.
/// Correct whenever the LP is bounded and its dropped rows are consistent
/// (the callers guarantee both).
inline VertexLp vertex_enumeration(const LinearProgram& lp) {
  const auto rows = lp.a_eq.rows();
  const auto cols = lp.a_eq.cols();
  // Independent rows only, so a basis has as many columns as the rank.
  const auto rank = Eigen::FullPivLU<Eigen::MatrixXd>(lp.a_eq).rank();
  Eigen::MatrixXd a = lp.a_eq;
  Eigen::VectorXd b = lp.b_eq;
  if (rank < rows) {
    // Keep rows greedily while they add rank.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < rows; ++r) {
      keep.push_back(r);
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(keep.size()), cols);
      for (std::size_t i = 0; i < keep.size(); ++i) sub.row(static_cast<Eigen::Index>(i)) = lp.a_eq.row(keep[i]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
      if (lu.rank() < static_cast<Eigen::Index>(keep.size())) keep.pop_back();
    }
    a.resize(static_cast<Eigen::Index>(keep.size()), cols);
    b.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      a.row(static_cast<Eigen::Index>(i)) = lp.a_eq.row(keep[i]);
      b(static_cast<Eigen::Index>(i)) = lp.b_eq(keep[i]);
    }
  }
  const auto m = a.rows();
  VertexLp best;
  std::vector<int> pick(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) pick[static_cast<std::size_t>(i)] = static_cast<int>(i);
  while (true) {
    Eigen::MatrixXd basis(m, m);
    for (Eigen::Index i = 0; i < m; ++i) basis.col(i) = a.col(pick[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis);
    if (lu.isInvertible()) {
      const Eigen::VectorXd xb = lu.solve(b);
      if ((xb.array() >= -1e-9).all()) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(cols);
        for (Eigen::Index i = 0; i < m; ++i) x(pick[static_cast<std::size_t>(i)]) = std::max(0.0, xb(i));
        if (((lp.a_eq * x - lp.b_eq).cwiseAbs().array() <= 1e-7).all()) {
          const double value = lp.c.dot(x);
          best.feasible = true;
          if (value < best.objective) {
            best.objective = value;
            best.x = x;
          }
        }
      }
    }
    // Next combination of m columns out of cols.
    Eigen::Index i = m - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == cols - m + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < m; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

/// argmax over a grid of g(v), refined by repeated zooming; `lo`/`hi` bracket the search.
template <class F>
double grid_argmax(F g, double lo, double hi, int points = 2001, int rounds = 6) {
  double best = lo;
  for (int round = 0; round < rounds; ++round) {
    double best_value = -std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / (points - 1);
    for (int i = 0; i < points; ++i) {
      const double v = lo + step * i;
      const double value = g(v);
      if (value > best_value) {
        best_value = value;
        best = v;
      }
    }
    const double new_lo = std::max(lo, best - 2 * step);
    hi = std::min(hi, best + 2 * step);
    lo = new_lo;
  }
  return best;
}

}  // namespace nettomo::oracle
