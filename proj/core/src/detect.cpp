#include "nettomo/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nettomo/error.hpp"

namespace nettomo {

std::string to_string(EdgeLabel label) {
  switch (label) {
    case EdgeLabel::normal: return "normal";
    case EdgeLabel::new_edge: return "new_edge";
    case EdgeLabel::missing: return "missing";
    case EdgeLabel::changed: return "changed";
  }
  return "unknown";
}

EdgeLabel edge_label_from_string(const std::string& name) {
  for (auto label : {EdgeLabel::normal, EdgeLabel::new_edge, EdgeLabel::missing, EdgeLabel::changed})
    if (to_string(label) == name) return label;
  throw ConfigError("unknown edge label '" + name + "'");
}

double frobenius_divergence(const RateMatrix& estimate, const RateMatrix& baseline) {
  if (estimate.size() != baseline.size()) throw ContractError("rate matrices have different domains");
  double total = 0.0;
  for (std::size_t p = 0; p < estimate.size(); ++p) {
    const double d = estimate[p] - baseline[p];
    total += d * d;
  }
  return std::sqrt(total);
}

double calibrate_threshold(std::span<const double> null_statistics, double target_fpr) {
  if (null_statistics.size() < 20)
    throw ContractError("threshold calibration needs at least 20 null statistics, got " +
                        std::to_string(null_statistics.size()));
  if (!(target_fpr > 0.0 && target_fpr < 1.0)) throw ContractError("target_fpr must lie in (0, 1)");
  std::vector<double> sorted(null_statistics.begin(), null_statistics.end());
  std::sort(sorted.begin(), sorted.end());
  const double q = 1.0 - target_fpr;
  const double position = q * static_cast<double>(sorted.size() - 1);
  // Guard against q*(n-1) landing a rounding error above an integer.
  const double rounded = std::round(position);
  const auto index = static_cast<std::size_t>(std::abs(position - rounded) < 1e-9 ? rounded : std::ceil(position));
  return sorted[std::min(index, sorted.size() - 1)];
}

RocCurve roc_curve(std::span<const double> statistics, const std::vector<bool>& labels) {
  if (statistics.size() != labels.size()) throw ContractError("statistics and labels differ in length");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw ContractError("ROC needs both anomalous and null trials");

  std::vector<std::size_t> order(statistics.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return statistics[a] > statistics[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double value = statistics[order[i]];
    while (i < order.size() && statistics[order[i]] == value) {
      if (labels[order[i]]) ++tp; else ++fp;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives), value});
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    curve.auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return curve;
}

std::vector<EdgeFinding> classify_edges(const RateMatrix& estimate, const RateMatrix& baseline, double edge_tol) {
  if (estimate.size() != baseline.size()) throw ContractError("rate matrices have different domains");
  if (!(edge_tol >= 0.0)) throw ContractError("edge_tol must be nonnegative");
  std::vector<EdgeFinding> out(estimate.size());
  for (std::size_t p = 0; p < estimate.size(); ++p) {
    const double est = estimate[p];
    const double base = baseline[p];
    auto& finding = out[p];
    finding.change = est - base;
    if (base == 0.0 && est > edge_tol)
      finding.label = EdgeLabel::new_edge;
    else if (base > edge_tol && est <= edge_tol)
      finding.label = EdgeLabel::missing;
    else if (std::abs(est - base) > edge_tol)
      finding.label = EdgeLabel::changed;
  }
  return out;
}

DetectionResult detect(const RateMatrix& estimate, const RateMatrix& baseline, double threshold, double edge_tol) {
  DetectionResult result;
  result.statistic = frobenius_divergence(estimate, baseline);
  result.threshold = threshold;
  result.decision = result.statistic > threshold;
  result.per_edge = classify_edges(estimate, baseline, edge_tol);
  return result;
}

}  // namespace nettomo
