#ifndef HML_METRICS_HPP
#define HML_METRICS_HPP

#include <cstddef>
#include <vector>

#include "hml/mat.hpp"

namespace hml {

struct NodeCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Column-wise confusion counts of binary predictions against binary labels.
std::vector<NodeCounts> confusion_counts(const Mat& pred, const Mat& labels);

/// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); every 0/0 is 0.
Prf prf_from_counts(const NodeCounts& c);

struct MetricsReport {
  std::vector<NodeCounts> counts;
  std::vector<Prf> per_node;
  /// Unweighted mean over nodes with at least one ground-truth positive.
  Prf macro;
  /// Metrics of the pooled counts.
  Prf micro;
  double bin_ap = 0.0;
  double ap = 0.0;
};

/// Rectangular area under the precision-recall curve over the flattened
/// score/label pairs. Thresholds are the distinct scores in descending order;
/// tied scores enter as one block. Throws NotDefined when labels has no
/// positive entry.
double average_precision(const std::vector<double>& scores, const std::vector<double>& labels);
double average_precision(const Mat& scores, const Mat& labels);

/// average_precision of the scores binarized at the threshold
/// (>= threshold counts positive).
double binarized_ap(const Mat& probs, const Mat& labels, double threshold = 0.5);

/// Full report from constrained probabilities: predictions are the
/// probabilities thresholded, counts and P/R/F1 per node, macro and micro
/// aggregates, plus ap and bin_ap of the probabilities themselves.
MetricsReport compute_report(const Mat& constrained_probs, const Mat& labels,
                             double threshold = 0.5);

}  // namespace hml

#endif  // HML_METRICS_HPP
