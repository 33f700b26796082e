#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nettomo/observation.hpp"

namespace nettomo {

enum class EStepMethod { exact, ipf };

std::string to_string(EStepMethod method);

/// Conditional expected pair counts for one observation vector.
struct EStepResult {
  std::vector<double> expected;  // per pair, reproduces the conditioning observations
  EStepMethod method = EStepMethod::ipf;
  int iterations = 0;            // ipf sweeps plus Newton steps
  double residual = 0.0;         // max_r |(A x)_r - y_r|
  bool converged = true;
  /// exact only: log P(A N = y) under independent Poisson(rates).
  double log_likelihood = 0.0;
  std::uint64_t feasible_tables = 0;  // exact only
  /// ipf only (when requested): dual objective after each sweep. See estep_ipf.
  std::vector<double> objective_trace;
};

struct ExactOptions {
  /// Maximum number of search nodes visited before giving up with BudgetError.
  std::uint64_t budget = 20'000'000;
};

struct IpfOptions {
  double tol = 1e-8;
  int max_iter = 500;
  double rate_floor = 1e-9;
  /// Sweeps before switching to damped Newton steps on the dual (0 = never).
  int newton_after = 50;
  bool record_trace = false;
};

/// E[N | A N = y] under independent Poisson(rates) by enumerating every
/// nonnegative integer table consistent with y. Pairs touched by no row keep
/// their prior mean. Throws InfeasibleError when no table matches y and
/// BudgetError when the search exceeds the budget.
EStepResult estep_exact(const ObservationOperator& op, std::span<const double> rates,
                        std::span<const ObservationSeries::Value> y, const ExactOptions& options = {});

/// KL projection of the (floored) rates onto {x >= 0 : A x = y} by cyclic
/// proportional scaling of operator rows.
///
/// Writing x = rates * exp(A^T mu), each row update is an exact coordinate
/// minimisation of the dual D(mu) = sum_p x_p - sum_r mu_r y_r, so the recorded
/// objective trace is non-increasing; at the fixed point it equals
/// sum_p rates_p - KL(x* || rates).
///
/// Sweeps slow down badly when the solution sits close to the boundary, so
/// after `newton_after` sweeps the remaining iterations are Newton steps on
/// D with a backtracking line search (which keeps the trace non-increasing).
///
/// A positive row whose pairs have all been scaled to zero raises
/// InfeasibleError. Hitting max_iter returns the last iterate with
/// converged = false and the residual reported.
EStepResult estep_ipf(const ObservationOperator& op, std::span<const double> rates, std::span<const double> y_bar,
                      const IpfOptions& options = {});

/// Same projection started from rates * exp(A^T duals); `duals` (one per row)
/// is updated in place. Any start in that family has the same limit, so
/// passing the duals of a nearby earlier solve only saves sweeps.
EStepResult estep_ipf(const ObservationOperator& op, std::span<const double> rates, std::span<const double> y_bar,
                      const IpfOptions& options, std::span<double> duals);

/// Generalised KL divergence sum_p x log(x / q) - x + q.
double generalized_kl(std::span<const double> x, std::span<const double> q);

}  // namespace nettomo
