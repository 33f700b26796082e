#include "nettomo/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nettomo/error.hpp"

namespace nettomo {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

void LinearProgram::validate() const {
  if (a_eq.cols() != c.size()) throw ContractError("LP: A_eq column count differs from cost length");
  if (a_eq.rows() != b_eq.size()) throw ContractError("LP: A_eq row count differs from b_eq length");
  if (!c.allFinite() || !a_eq.allFinite() || !b_eq.allFinite()) throw ContractError("LP: data must be finite");
}

std::vector<Index> independent_rows(const MatrixXd& a, double pivot_tol) {
  std::vector<Index> kept;
  if (a.rows() == 0) return kept;
  if (a.cols() == 0 || a.isZero(0.0)) return kept;
  Eigen::ColPivHouseholderQR<MatrixXd> qr(a.transpose());
  qr.setThreshold(pivot_tol);
  const Index rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  kept.reserve(static_cast<std::size_t>(rank));
  for (Index k = 0; k < rank; ++k) kept.push_back(perm(k));
  std::sort(kept.begin(), kept.end());
  return kept;
}

namespace {

enum class IpmExit { converged, max_iter, primal_diverged, dual_diverged };

struct IpmOutcome {
  IpmExit exit = IpmExit::max_iter;
  VectorXd x, y, s;
  int iterations = 0;
};

constexpr double kDivergence = 1e14;

double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

// Cholesky of A D A^T, regularised only when the plain factorisation fails.
Eigen::LLT<MatrixXd> factor_normal_matrix(const MatrixXd& a, const VectorXd& d) {
  MatrixXd m = a * d.asDiagonal() * a.transpose();
  Eigen::LLT<MatrixXd> llt(m);
  double shift = 1e-14 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  while (llt.info() != Eigen::Success && shift < 1.0) {
    m.diagonal().array() += shift;
    llt.compute(m);
    shift *= 100.0;
  }
  return llt;
}

// Infeasible-start primal-dual interior point for a full-row-rank standard form LP.
IpmOutcome interior_point(const MatrixXd& a, const VectorXd& b, const VectorXd& c, double tol, int max_iter) {
  const Index m = a.rows();
  const Index n = a.cols();
  IpmOutcome out;

  // Mehrotra's starting point heuristic.
  VectorXd x, y, s;
  {
    Eigen::LLT<MatrixXd> aat = factor_normal_matrix(a, VectorXd::Ones(n));
    x = a.transpose() * aat.solve(b);
    y = aat.solve(a * c);
    s = c - a.transpose() * y;
    const double dx = std::max(-1.5 * (n > 0 ? x.minCoeff() : 0.0), 0.0);
    const double ds = std::max(-1.5 * (n > 0 ? s.minCoeff() : 0.0), 0.0);
    x.array() += dx;
    s.array() += ds;
    const double xs = x.dot(s);
    if (x.sum() > 0.0 && s.sum() > 0.0) {
      x.array() += 0.5 * xs / s.sum();
      s.array() += 0.5 * xs / x.sum();
    }
    if (!(x.minCoeff() > 0.0) || !(s.minCoeff() > 0.0) || !x.allFinite() || !s.allFinite()) {
      x.setOnes();
      s.setOnes();
      y.setZero();
    }
  }
  (void)m;

  VectorXd dx(n), dy, ds(n), dx_aff, ds_aff;
  for (int iter = 0;; ++iter) {
    const VectorXd rb = a * x - b;
    const VectorXd rc = a.transpose() * y + s - c;
    const double comp = x.cwiseProduct(s).maxCoeff();
    out.iterations = iter;
    if (rb.lpNorm<Eigen::Infinity>() <= tol && rc.lpNorm<Eigen::Infinity>() <= tol && comp <= tol) {
      out.exit = IpmExit::converged;
      break;
    }
    if (x.lpNorm<Eigen::Infinity>() > kDivergence) {
      out.exit = IpmExit::primal_diverged;
      break;
    }
    if (y.lpNorm<Eigen::Infinity>() > kDivergence || s.lpNorm<Eigen::Infinity>() > kDivergence) {
      out.exit = IpmExit::dual_diverged;
      break;
    }
    if (iter >= max_iter) {
      out.exit = IpmExit::max_iter;
      break;
    }

    const double mu = x.dot(s) / static_cast<double>(n);
    const VectorXd d = x.cwiseQuotient(s);
    const auto normal = factor_normal_matrix(a, d);

    auto newton = [&](const VectorXd& rxs) {
      const VectorXd inner = rxs.cwiseQuotient(s) + d.cwiseProduct(rc);
      dy = normal.solve(-rb - a * inner);
      ds = -rc - a.transpose() * dy;
      dx = inner + d.cwiseProduct(a.transpose() * dy);
    };

    // Predictor.
    newton(-x.cwiseProduct(s));
    const double ap_aff = max_step(x, dx);
    const double ad_aff = max_step(s, ds);
    const double mu_aff = (x + ap_aff * dx).dot(s + ad_aff * ds) / static_cast<double>(n);
    const double sigma = std::pow(mu_aff / mu, 3);
    dx_aff = dx;
    ds_aff = ds;

    // Corrector.
    newton((-x.cwiseProduct(s) - dx_aff.cwiseProduct(ds_aff)).array() + sigma * mu);
    const double eta = std::max(0.9, 1.0 - mu);
    const double ap = std::min(1.0, eta * max_step(x, dx));
    const double ad = std::min(1.0, eta * max_step(s, ds));
    x += ap * dx;
    y += ad * dy;
    s += ad * ds;
  }
  out.x = std::move(x);
  out.y = std::move(y);
  out.s = std::move(s);
  return out;
}

// Phase 1: min sum(art) s.t. sign(b) * A x + art = |b|, x, art >= 0.
// Returns the minimum artificial mass and the iterations spent.
std::pair<double, int> phase_one(const MatrixXd& a, const VectorXd& b, double tol, int max_iter) {
  const Index m = a.rows();
  const Index n = a.cols();
  MatrixXd a1(m, n + m);
  VectorXd b1(m);
  for (Index r = 0; r < m; ++r) {
    const double sign = b(r) < 0.0 ? -1.0 : 1.0;
    a1.row(r).head(n) = sign * a.row(r);
    b1(r) = sign * b(r);
  }
  a1.rightCols(m).setIdentity();
  VectorXd c1 = VectorXd::Zero(n + m);
  c1.tail(m).setOnes();
  const IpmOutcome phase = interior_point(a1, b1, c1, tol, max_iter);
  const double artificial = phase.x.tail(m).sum();
  return {artificial, phase.iterations};
}

}  // namespace

LpResult lp_solve(const LinearProgram& lp, const LpOptions& options) {
  lp.validate();
  const Index n = lp.variable_count();
  const Index m = lp.constraint_count();
  LpResult result;
  result.x = VectorXd::Zero(n);
  result.y = VectorXd::Zero(m);
  result.s = lp.c;

  auto finish_residuals = [&] {
    result.primal_residual = m > 0 ? (lp.a_eq * result.x - lp.b_eq).lpNorm<Eigen::Infinity>() : 0.0;
    result.dual_residual = n > 0 ? (lp.a_eq.transpose() * result.y + result.s - lp.c).lpNorm<Eigen::Infinity>() : 0.0;
    result.complementarity = n > 0 ? result.x.cwiseProduct(result.s).cwiseAbs().maxCoeff() : 0.0;
    result.objective = lp.c.dot(result.x);
  };

  if (n == 0) {
    result.status = (m == 0 || lp.b_eq.lpNorm<Eigen::Infinity>() <= options.tol) ? LpStatus::optimal
                                                                                  : LpStatus::infeasible;
    finish_residuals();
    return result;
  }
  if (m == 0) {
    if (lp.c.minCoeff() < 0.0) {
      result.status = LpStatus::unbounded;
    } else {
      result.status = LpStatus::optimal;
    }
    finish_residuals();
    return result;
  }

  const double phase1_tol = options.tol * 1e-3;
  const auto [artificial, p1_iters] = phase_one(lp.a_eq, lp.b_eq, phase1_tol, options.max_iter);
  result.phase1_iterations = p1_iters;
  if (artificial > options.tol) {
    result.status = LpStatus::infeasible;
    finish_residuals();
    return result;
  }

  result.kept_rows = independent_rows(lp.a_eq, options.pivot_tol);
  const Index k = static_cast<Index>(result.kept_rows.size());
  MatrixXd a(k, n);
  VectorXd b(k);
  for (Index r = 0; r < k; ++r) {
    a.row(r) = lp.a_eq.row(result.kept_rows[static_cast<std::size_t>(r)]);
    b(r) = lp.b_eq(result.kept_rows[static_cast<std::size_t>(r)]);
  }

  if (lp.c.minCoeff() < 0.0) {
    // Dual feasibility: A^T (y+ - y-) + s = c with y+, y-, s >= 0.
    MatrixXd dual(n, 2 * k + n);
    dual.leftCols(k) = a.transpose();
    dual.middleCols(k, k) = -a.transpose();
    dual.rightCols(n).setIdentity();
    const auto [dual_artificial, dual_iters] = phase_one(dual, lp.c, phase1_tol, options.max_iter);
    result.phase1_iterations += dual_iters;
    if (dual_artificial > options.tol) {
      result.status = LpStatus::unbounded;
      finish_residuals();
      return result;
    }
  }

  if (k == 0) {
    // b is (numerically) zero and A vanishes: x = 0 is optimal since c >= 0 here.
    result.status = LpStatus::optimal;
    finish_residuals();
    return result;
  }

  const IpmOutcome phase2 = interior_point(a, b, lp.c, options.tol, options.max_iter);
  result.iterations = phase2.iterations;
  result.x = phase2.x;
  result.s = phase2.s;
  for (Index r = 0; r < k; ++r) result.y(result.kept_rows[static_cast<std::size_t>(r)]) = phase2.y(r);
  switch (phase2.exit) {
    case IpmExit::converged: result.status = LpStatus::optimal; break;
    case IpmExit::max_iter: result.status = LpStatus::max_iter; break;
    case IpmExit::primal_diverged: result.status = LpStatus::unbounded; break;
    case IpmExit::dual_diverged: result.status = LpStatus::infeasible; break;
  }
  finish_residuals();
  return result;
}

LinearProgram build_l1_projection_lp(const RateMatrix& baseline, const ObservationOperator& op,
                                     std::span<const double> y_bar) {
  const auto pairs = static_cast<Index>(op.pair_count());
  const auto rows = static_cast<Index>(op.row_count());
  if (static_cast<Index>(baseline.size()) != pairs) throw ContractError("baseline does not match operator columns");
  if (static_cast<Index>(y_bar.size()) != rows) throw ContractError("observation vector does not match operator rows");

  LinearProgram lp;
  lp.c = VectorXd::Zero(3 * pairs);
  lp.c.tail(2 * pairs).setOnes();
  lp.a_eq = MatrixXd::Zero(rows + pairs, 3 * pairs);
  lp.b_eq = VectorXd::Zero(rows + pairs);
  lp.a_eq.topLeftCorner(rows, pairs) = op.dense();
  for (Index r = 0; r < rows; ++r) lp.b_eq(r) = y_bar[static_cast<std::size_t>(r)];
  for (Index p = 0; p < pairs; ++p) {
    lp.a_eq(rows + p, p) = 1.0;
    lp.a_eq(rows + p, pairs + p) = -1.0;
    lp.a_eq(rows + p, 2 * pairs + p) = 1.0;
    lp.b_eq(rows + p) = baseline[static_cast<std::size_t>(p)];
  }
  return lp;
}

std::vector<double> l1_projection_rates(const LpResult& result, std::size_t pair_count) {
  if (static_cast<std::size_t>(result.x.size()) < pair_count) throw ContractError("LP solution is too short");
  std::vector<double> rates(pair_count);
  for (std::size_t p = 0; p < pair_count; ++p) rates[p] = std::max(0.0, result.x(static_cast<Index>(p)));
  return rates;
}

}  // namespace nettomo
