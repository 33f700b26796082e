#include "nettomo/estep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "nettomo/error.hpp"

namespace nettomo {

std::string to_string(EStepMethod method) { return method == EStepMethod::exact ? "exact" : "ipf"; }

namespace {

void check_dimensions(const ObservationOperator& op, std::size_t rates, std::size_t y) {
  if (rates != op.pair_count()) throw ContractError("rate vector does not match operator columns");
  if (y != op.row_count()) throw ContractError("observation vector does not match operator rows");
}

// Depth-first enumeration of feasible integer tables with streaming
// log-sum-exp accumulation of the Poisson weights.
class TableEnumerator {
 public:
  TableEnumerator(const ObservationOperator& op, std::span<const double> rates,
                  std::span<const ObservationSeries::Value> y, std::uint64_t budget)
      : op_(op), rates_(rates), remaining_(y.begin(), y.end()), budget_(budget) {
    for (std::size_t p = 0; p < op.pair_count(); ++p)
      if (!op.pair_rows(p).empty()) order_.push_back(p);
    closes_.resize(order_.size());
    for (std::size_t r = 0; r < op.row_count(); ++r) {
      auto support = op.row_pairs(r);
      if (support.empty()) {
        if (y[r] != 0) throw InfeasibleError("observation row " + std::to_string(r) + " has no pairs but is positive");
        continue;
      }
      const auto last = std::find(order_.begin(), order_.end(), support.back()) - order_.begin();
      closes_[static_cast<std::size_t>(last)].push_back(r);
    }
    log_rate_.resize(op.pair_count());
    for (std::size_t p = 0; p < rates.size(); ++p)
      log_rate_[p] = rates[p] > 0.0 ? std::log(rates[p]) : -std::numeric_limits<double>::infinity();
    assignment_.assign(op.pair_count(), 0);
    weighted_.assign(op.pair_count(), 0.0);
  }

  void run() { descend(0, 0.0); }

  std::uint64_t leaves() const { return leaves_; }
  double scale() const { return scale_; }
  double mass() const { return mass_; }
  const std::vector<double>& weighted() const { return weighted_; }
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  void descend(std::size_t depth, double log_weight) {
    if (++visited_ > budget_) throw BudgetError("exact E-step exceeded its enumeration budget");
    if (depth == order_.size()) {
      accept(log_weight);
      return;
    }
    const std::size_t p = order_[depth];
    ObservationSeries::Value upper = std::numeric_limits<ObservationSeries::Value>::max();
    for (std::size_t r : op_.pair_rows(p)) upper = std::min(upper, remaining_[r]);
    if (!(rates_[p] > 0.0)) upper = std::min<ObservationSeries::Value>(upper, 0);

    ObservationSeries::Value lower = 0;
    // A row whose last pair is p pins x_p to the row's remainder.
    for (std::size_t r : closes_[depth]) {
      lower = std::max(lower, remaining_[r]);
      upper = std::min(upper, remaining_[r]);
    }
    for (ObservationSeries::Value x = lower; x <= upper; ++x) {
      for (std::size_t r : op_.pair_rows(p)) remaining_[r] -= x;
      assignment_[p] = x;
      const double xd = static_cast<double>(x);
      const double term = x == 0 ? 0.0 : xd * log_rate_[p] - std::lgamma(xd + 1.0);
      descend(depth + 1, log_weight + term);
      for (std::size_t r : op_.pair_rows(p)) remaining_[r] += x;
    }
    assignment_[p] = 0;
  }

  void accept(double log_weight) {
    ++leaves_;
    if (log_weight > scale_) {
      const double shrink = std::exp(scale_ - log_weight);
      mass_ *= shrink;
      for (double& w : weighted_) w *= shrink;
      scale_ = log_weight;
    }
    const double w = std::exp(log_weight - scale_);
    mass_ += w;
    for (std::size_t p : order_) weighted_[p] += w * static_cast<double>(assignment_[p]);
  }

  const ObservationOperator& op_;
  std::span<const double> rates_;
  std::vector<ObservationSeries::Value> remaining_;
  std::uint64_t budget_;
  std::uint64_t visited_ = 0;
  std::uint64_t leaves_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::vector<std::size_t>> closes_;
  std::vector<double> log_rate_;
  std::vector<ObservationSeries::Value> assignment_;
  double scale_ = -std::numeric_limits<double>::infinity();
  double mass_ = 0.0;
  std::vector<double> weighted_;
};

}  // namespace

EStepResult estep_exact(const ObservationOperator& op, std::span<const double> rates,
                        std::span<const ObservationSeries::Value> y, const ExactOptions& options) {
  check_dimensions(op, rates.size(), y.size());
  for (auto v : y)
    if (v < 0) throw ContractError("observations must be nonnegative");

  TableEnumerator search(op, rates, y, options.budget);
  search.run();
  if (search.leaves() == 0) throw InfeasibleError("no nonnegative integer traffic reproduces the observations");

  EStepResult result;
  result.method = EStepMethod::exact;
  result.feasible_tables = search.leaves();
  result.expected.assign(rates.begin(), rates.end());
  double constrained_rate = 0.0;
  for (std::size_t p : search.order()) {
    result.expected[p] = search.weighted()[p] / search.mass();
    constrained_rate += rates[p];
  }
  result.log_likelihood = search.scale() + std::log(search.mass()) - constrained_rate;

  for (std::size_t r = 0; r < op.row_count(); ++r) {
    double sum = 0.0;
    for (std::size_t p : op.row_pairs(r)) sum += result.expected[p];
    result.residual = std::max(result.residual, std::abs(sum - static_cast<double>(y[r])));
  }
  return result;
}

EStepResult estep_ipf(const ObservationOperator& op, std::span<const double> rates, std::span<const double> y_bar,
                      const IpfOptions& options) {
  std::vector<double> duals(op.row_count(), 0.0);
  return estep_ipf(op, rates, y_bar, options, duals);
}

EStepResult estep_ipf(const ObservationOperator& op, std::span<const double> rates, std::span<const double> y_bar,
                      const IpfOptions& options, std::span<double> duals) {
  check_dimensions(op, rates.size(), y_bar.size());
  if (duals.size() != op.row_count()) throw ContractError("one dual value per observation row expected");
  for (double v : y_bar)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("mean observations must be finite and nonnegative");

  EStepResult result;
  result.method = EStepMethod::ipf;
  auto& x = result.expected;
  x.resize(rates.size());
  const std::size_t rows = op.row_count();
  auto mu = duals;
  for (std::size_t p = 0; p < rates.size(); ++p) {
    double shift = 0.0;
    for (std::size_t r : op.pair_rows(p))
      if (y_bar[r] > 0.0) shift += mu[r];
    x[p] = std::max(rates[p], options.rate_floor) * std::exp(std::clamp(shift, -700.0, 700.0));
  }

  auto residual = [&] {
    double worst = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t p : op.row_pairs(r)) sum += x[p];
      worst = std::max(worst, std::abs(sum - y_bar[r]));
    }
    return worst;
  };
  // Row scalings accumulate multiplicatively in `gain` and fold into mu
  // lazily, which keeps logarithms out of the inner loop.
  std::vector<double> gain(rows, 1.0);
  auto fold = [&](std::size_t r) {
    mu[r] += std::log(gain[r]);
    gain[r] = 1.0;
  };
  auto dual = [&] {
    double value = 0.0;
    for (double v : x) value += v;
    for (std::size_t r = 0; r < rows; ++r)
      if (y_bar[r] > 0.0) value -= (mu[r] + std::log(gain[r])) * y_bar[r];
    return value;
  };

  result.converged = false;
  result.residual = residual();
  if (result.residual <= options.tol) {
    result.converged = true;
    return result;
  }
  int sweep = 1;
  for (; sweep <= options.max_iter && (options.newton_after <= 0 || sweep <= options.newton_after); ++sweep) {
    for (std::size_t r = 0; r < rows; ++r) {
      auto support = op.row_pairs(r);
      if (y_bar[r] == 0.0) {
        for (std::size_t p : support) x[p] = 0.0;
        continue;
      }
      double sum = 0.0;
      for (std::size_t p : support) sum += x[p];
      if (!(sum > 0.0))
        throw InfeasibleError("observation row " + std::to_string(r) +
                              " is positive but every pair it covers is forced to zero");
      const double factor = y_bar[r] / sum;
      if (factor == 1.0) continue;
      if (support.size() == 1) {
        x[support[0]] = y_bar[r];  // exact assignment for directly observed pairs
      } else {
        for (std::size_t p : support) x[p] *= factor;
      }
      gain[r] *= factor;
      if (gain[r] < 1e-150 || gain[r] > 1e150) fold(r);
    }
    result.iterations = sweep;
    result.residual = residual();
    if (options.record_trace) result.objective_trace.push_back(dual());
    if (result.residual <= options.tol) {
      result.converged = true;
      break;
    }
  }
  for (std::size_t r = 0; r < rows; ++r) fold(r);
  if (result.converged || sweep > options.max_iter) return result;

  // Slow sweeps: damped Newton on the same dual over the positive rows.
  std::vector<std::size_t> active;
  std::vector<Eigen::Index> slot(rows, -1);
  for (std::size_t r = 0; r < rows; ++r)
    if (y_bar[r] > 0.0) {
      slot[r] = static_cast<Eigen::Index>(active.size());
      active.push_back(r);
    }
  const auto m = static_cast<Eigen::Index>(active.size());
  double value = dual();
  int stalled = 0;
  for (; sweep <= options.max_iter; ++sweep) {
    Eigen::VectorXd grad(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      double sum = 0.0;
      for (std::size_t p : op.row_pairs(active[static_cast<std::size_t>(i)])) sum += x[p];
      grad(i) = sum - y_bar[active[static_cast<std::size_t>(i)]];
    }
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t p = 0; p < x.size(); ++p) {
      if (x[p] == 0.0) continue;
      for (std::size_t a : op.pair_rows(p)) {
        if (slot[a] < 0) continue;
        for (std::size_t b : op.pair_rows(p))
          if (slot[b] >= 0) hess(slot[a], slot[b]) += x[p];
      }
    }
    // Dependent rows make the Hessian singular; the gradient lies in its
    // range, so a pseudo-inverse step is exact there.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const double cutoff = 1e-14 * std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
    Eigen::VectorXd coeff = eig.eigenvectors().transpose() * grad;
    for (Eigen::Index i = 0; i < m; ++i) coeff(i) = eig.eigenvalues()(i) > cutoff ? coeff(i) / eig.eigenvalues()(i) : 0.0;
    const Eigen::VectorXd step = -(eig.eigenvectors() * coeff);
    const double slope = grad.dot(step);
    if (!step.allFinite() || !(slope < 0.0)) break;

    std::vector<double> shift(x.size(), 0.0);
    for (std::size_t p = 0; p < x.size(); ++p)
      for (std::size_t r : op.pair_rows(p))
        if (slot[r] >= 0) shift[p] += step(slot[r]);
    std::vector<double> trial(x.size());
    const bool flat = -slope < 1e-12 * std::max(1.0, std::abs(value));
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60 && !accepted; ++halving, t *= 0.5) {
      double trial_value = 0.0;
      for (std::size_t p = 0; p < x.size(); ++p) {
        trial[p] = x[p] == 0.0 ? 0.0 : x[p] * std::exp(std::min(t * shift[p], 700.0));
        trial_value += trial[p];
      }
      for (Eigen::Index i = 0; i < m; ++i)
        trial_value -= (mu[active[static_cast<std::size_t>(i)]] + t * step(i)) * y_bar[active[static_cast<std::size_t>(i)]];
      // Near the optimum the decrease in D drops below rounding; there a
      // smaller residual decides.
      bool better = !flat && trial_value <= value + 1e-4 * t * slope;
      if (flat) {
        double worst = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          double sum = 0.0;
          for (std::size_t p : op.row_pairs(r)) sum += trial[p];
          worst = std::max(worst, std::abs(sum - y_bar[r]));
        }
        better = worst < 0.5 * result.residual;
      }
      if (std::isfinite(trial_value) && better) {
        accepted = true;
        value = trial_value;
        x.swap(trial);
        for (Eigen::Index i = 0; i < m; ++i) mu[active[static_cast<std::size_t>(i)]] += t * step(i);
      }
    }
    if (!accepted) break;
    result.iterations = sweep;
    const double before = result.residual;
    result.residual = residual();
    stalled = result.residual < before ? 0 : stalled + 1;
    if (stalled == 5) break;
    if (options.record_trace) result.objective_trace.push_back(value);
    if (result.residual <= options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

double generalized_kl(std::span<const double> x, std::span<const double> q) {
  if (x.size() != q.size()) throw ContractError("KL arguments differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) total += x[i] * std::log(x[i] / q[i]);
    total += q[i] - x[i];
  }
  return total;
}

}  // namespace nettomo
