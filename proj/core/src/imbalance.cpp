#include "hml/imbalance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "hml/errors.hpp"

namespace hml {

std::vector<double> raw_weights(const NodeFrequencies& freqs, NClassesMode mode) {
  const std::size_t n = freqs.counts.size();
  const double n_classes = (mode == NClassesMode::node_count) ? static_cast<double>(n) : 2.0;
  const double n_obs = static_cast<double>(freqs.total_obs);
  std::vector<double> w(n, 0.0);
  double max_seen = 0.0;
  bool any_seen = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (freqs.counts[i] > 0) {
      w[i] = n_obs / (n_classes * static_cast<double>(freqs.counts[i]));
      max_seen = any_seen ? std::max(max_seen, w[i]) : w[i];
      any_seen = true;
    }
  }
  if (!any_seen) throw Error("imbalance weights undefined: no node has a positive annotation");
  for (std::size_t i = 0; i < n; ++i) {
    if (freqs.counts[i] == 0) {
      std::fprintf(stderr, "warning: node %zu has no positive annotations, using max weight %g\n",
                   i, max_seen);
      w[i] = max_seen;
    }
  }
  return w;
}

std::vector<double> rescale_weights(const std::vector<double>& w, double w0) {
  if (w.empty()) throw Error("rescale_weights: empty weight vector");
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  const double w_min = *lo, w_max = *hi;
  std::vector<double> out(w.size());
  if (w_max == w_min) {
    std::fill(out.begin(), out.end(), w0);
    return out;
  }
  const double range = w_max - w_min;
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w0 + w[i] * (w[i] - w_min) / range;
  return out;
}

Mat weight_matrix(const std::vector<double>& w_tilde, const Mat& labels) {
  if (labels.cols != w_tilde.size())
    throw ShapeError("weight_matrix: " + std::to_string(labels.cols) + " columns for " +
                     std::to_string(w_tilde.size()) + " weights");
  Mat out(labels.rows, labels.cols, 1.0);
  for (std::size_t b = 0; b < labels.rows; ++b) {
    const double* lrow = labels.row_ptr(b);
    double* orow = out.row_ptr(b);
    for (std::size_t j = 0; j < labels.cols; ++j)
      if (lrow[j] != 0.0) orow[j] = w_tilde[j];
  }
  return out;
}

std::vector<double> scheduled_weights(const std::vector<double>& w_tilde,
                                      const SchedulerState& s) {
  if (s.t >= s.n_steps)
    throw Error("scheduler step " + std::to_string(s.t) + " out of range for " +
                std::to_string(s.n_steps) + " steps");
  switch (s.kind) {
    case SchedulerKind::none:
    case SchedulerKind::mixed:
      return w_tilde;
    case SchedulerKind::alternating:
      if (s.t % 2 == 0) return w_tilde;
      return std::vector<double>(w_tilde.size(), 1.0);
    case SchedulerKind::linear:
    case SchedulerKind::exponential: {
      // Endpoints are exact: the schedule starts at w~ and finishes unweighted.
      if (s.t == 0 || s.n_steps == 1) return w_tilde;
      if (s.t == s.n_steps - 1) return std::vector<double>(w_tilde.size(), 1.0);
      const double k = (s.kind == SchedulerKind::linear) ? 1.0 : s.k_exp;
      const double frac = std::pow(static_cast<double>(s.t), k) /
                          std::pow(static_cast<double>(s.n_steps - 1), k);
      std::vector<double> out(w_tilde.size());
      for (std::size_t i = 0; i < w_tilde.size(); ++i)
        out[i] = w_tilde[i] + frac * (1.0 - w_tilde[i]);
      return out;
    }
  }
  return w_tilde;
}

Mat mixed_loss(const Mat& loss_weighted, const Mat& loss_unweighted, double lambda) {
  check_same_shape(loss_weighted, loss_unweighted, "mixed_loss");
  Mat out(loss_weighted.rows, loss_weighted.cols);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = lambda * loss_weighted.v[i] + (1.0 - lambda) * loss_unweighted.v[i];
  return out;
}

}  // namespace hml
