#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nettomo/observation.hpp"

namespace nettomo {

/// min c^T x  s.t.  A_eq x = b_eq,  x >= 0.
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;

  Eigen::Index variable_count() const { return c.size(); }
  Eigen::Index constraint_count() const { return a_eq.rows(); }
  /// Throws ContractError on inconsistent dimensions or non-finite data.
  void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded, max_iter };

std::string to_string(LpStatus status);

struct LpOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Relative pivot threshold for dropping linearly dependent equality rows.
  double pivot_tol = 1e-10;
};

struct LpResult {
  LpStatus status = LpStatus::max_iter;
  Eigen::VectorXd x;  // primal
  Eigen::VectorXd y;  // equality duals (0 on rows dropped as redundant)
  Eigen::VectorXd s;  // reduced costs
  double objective = 0.0;
  int iterations = 0;         // phase 2 interior-point iterations
  int phase1_iterations = 0;
  double primal_residual = 0.0;   // ||A x - b||_inf over all original rows
  double dual_residual = 0.0;     // ||A^T y + s - c||_inf
  double complementarity = 0.0;   // max_i x_i s_i
  std::vector<Eigen::Index> kept_rows;
};

/// Indices (ascending) of a maximal linearly independent subset of rows,
/// chosen by column-pivoted QR of A^T.
std::vector<Eigen::Index> independent_rows(const Eigen::MatrixXd& a, double pivot_tol = 1e-10);

/// Dense primal-dual path-following interior-point method with Mehrotra
/// predictor-corrector steps.
///
/// A Phase-1 problem (artificial slack per row) decides feasibility first; when
/// some cost is negative a second Phase-1 on the dual constraints decides
/// boundedness. On degenerate optimal faces the returned point is wherever the
/// central path lands, so only the objective is unique.
LpResult lp_solve(const LinearProgram& lp, const LpOptions& options = {});

/// Split-form L1 projection: variables (lambda, p, n) >= 0 with
/// lambda - p + n = baseline, A lambda = y_bar and cost sum(p + n).
/// Row order: the operator rows first, then one row per pair.
LinearProgram build_l1_projection_lp(const RateMatrix& baseline, const ObservationOperator& op,
                                     std::span<const double> y_bar);

/// lambda block of an L1-projection solution, clipped at zero.
std::vector<double> l1_projection_rates(const LpResult& result, std::size_t pair_count);

}  // namespace nettomo
