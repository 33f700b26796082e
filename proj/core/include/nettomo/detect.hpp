#pragma once

#include <span>
#include <string>
#include <vector>

#include "nettomo/topology.hpp"

namespace nettomo {

enum class EdgeLabel { normal, new_edge, missing, changed };

std::string to_string(EdgeLabel label);
EdgeLabel edge_label_from_string(const std::string& name);

struct EdgeFinding {
  EdgeLabel label = EdgeLabel::normal;
  double change = 0.0;  // estimate - baseline
};

struct DetectionResult {
  double statistic = 0.0;  // ||estimate - baseline||_F
  double threshold = 0.0;
  bool decision = false;   // statistic > threshold
  std::vector<EdgeFinding> per_edge;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // decide "anomalous" when statistic >= threshold
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0.0;
};

double frobenius_divergence(const RateMatrix& estimate, const RateMatrix& baseline);

/// Empirical (1 - target_fpr) quantile of the null statistics using the
/// "higher" convention: the order statistic at index ceil(q * (n - 1)).
/// Needs at least 20 statistics; they are sorted internally.
double calibrate_threshold(std::span<const double> null_statistics, double target_fpr);

/// ROC from sweeping the threshold over every distinct statistic; equal
/// statistics enter together. AUC by the trapezoidal rule. `labels[i]` is
/// true for anomalous trials. Both classes must be present.
RocCurve roc_curve(std::span<const double> statistics, const std::vector<bool>& labels);

/// new_edge: base == 0 and est > tol; missing: base > tol and est <= tol;
/// changed: |est - base| > tol otherwise; normal else.
std::vector<EdgeFinding> classify_edges(const RateMatrix& estimate, const RateMatrix& baseline, double edge_tol = 0.1);

DetectionResult detect(const RateMatrix& estimate, const RateMatrix& baseline, double threshold,
                       double edge_tol = 0.1);

}  // namespace nettomo
