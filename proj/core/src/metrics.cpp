#include "hml/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "hml/errors.hpp"

namespace hml {

std::vector<NodeCounts> confusion_counts(const Mat& pred, const Mat& labels) {
  check_same_shape(pred, labels, "confusion_counts");
  std::vector<NodeCounts> counts(pred.cols);
  for (std::size_t b = 0; b < pred.rows; ++b) {
    const double* prow = pred.row_ptr(b);
    const double* lrow = labels.row_ptr(b);
    for (std::size_t j = 0; j < pred.cols; ++j) {
      const bool p = prow[j] != 0.0;
      const bool y = lrow[j] != 0.0;
      if (p && y)
        ++counts[j].tp;
      else if (p && !y)
        ++counts[j].fp;
      else if (!p && y)
        ++counts[j].fn;
      else
        ++counts[j].tn;
    }
  }
  return counts;
}

Prf prf_from_counts(const NodeCounts& c) {
  Prf out;
  const double tp = static_cast<double>(c.tp);
  out.precision = (c.tp + c.fp > 0) ? tp / static_cast<double>(c.tp + c.fp) : 0.0;
  out.recall = (c.tp + c.fn > 0) ? tp / static_cast<double>(c.tp + c.fn) : 0.0;
  const double denom = out.precision + out.recall;
  out.f1 = (denom > 0.0) ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

double average_precision(const std::vector<double>& scores, const std::vector<double>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("average_precision: size mismatch");
  double total_pos = 0.0;
  for (double y : labels) total_pos += (y != 0.0) ? 1.0 : 0.0;
  if (total_pos == 0.0) throw NotDefined("average precision undefined without positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0, cum_tp = 0.0, cum_fp = 0.0, prev_recall = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    // Everything tied at this score enters the positive set together.
    while (i < order.size() && scores[order[i]] == threshold) {
      if (labels[order[i]] != 0.0)
        cum_tp += 1.0;
      else
        cum_fp += 1.0;
      ++i;
    }
    const double recall = cum_tp / total_pos;
    const double precision = cum_tp / (cum_tp + cum_fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

double average_precision(const Mat& scores, const Mat& labels) {
  check_same_shape(scores, labels, "average_precision");
  return average_precision(scores.v, labels.v);
}

double binarized_ap(const Mat& probs, const Mat& labels, double threshold) {
  check_same_shape(probs, labels, "binarized_ap");
  std::vector<double> bin(probs.v.size());
  for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = (probs.v[i] >= threshold) ? 1.0 : 0.0;
  return average_precision(bin, labels.v);
}

MetricsReport compute_report(const Mat& constrained_probs, const Mat& labels, double threshold) {
  check_same_shape(constrained_probs, labels, "compute_report");
  MetricsReport r;
  Mat pred(constrained_probs.rows, constrained_probs.cols);
  for (std::size_t i = 0; i < pred.v.size(); ++i)
    pred.v[i] = (constrained_probs.v[i] >= threshold) ? 1.0 : 0.0;
  r.counts = confusion_counts(pred, labels);
  r.per_node.reserve(r.counts.size());
  NodeCounts pooled;
  double macro_p = 0.0, macro_r = 0.0, macro_f = 0.0;
  std::size_t present = 0;
  for (const NodeCounts& c : r.counts) {
    r.per_node.push_back(prf_from_counts(c));
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.fn += c.fn;
    pooled.tn += c.tn;
    if (c.tp + c.fn > 0) {
      ++present;
      macro_p += r.per_node.back().precision;
      macro_r += r.per_node.back().recall;
      macro_f += r.per_node.back().f1;
    }
  }
  if (present > 0) {
    const double d = static_cast<double>(present);
    r.macro = {macro_p / d, macro_r / d, macro_f / d};
  }
  r.micro = prf_from_counts(pooled);
  r.ap = average_precision(constrained_probs, labels);
  r.bin_ap = binarized_ap(constrained_probs, labels, threshold);
  return r;
}

}  // namespace hml
