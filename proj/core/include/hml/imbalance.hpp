#ifndef HML_IMBALANCE_HPP
#define HML_IMBALANCE_HPP

#include <cstddef>
#include <vector>

#include "hml/hierarchy.hpp"
#include "hml/mat.hpp"

namespace hml {

enum class NClassesMode { node_count, binary };

/// w_i = N_obs / (N_classes * n_i). N_classes is the node count in
/// node_count mode, 2 in binary mode. A node never seen positive gets the
/// largest weight among seen nodes. Throws when no node was ever positive.
std::vector<double> raw_weights(const NodeFrequencies& freqs, NClassesMode mode);

/// w~_i = w0 + w_i * (w_i - w_min) / (w_max - w_min). When all raw weights
/// coincide the normalized factor is 0 and every node gets exactly w0.
/// The minimum-weight node lands on w0 exactly; all others are above it.
std::vector<double> rescale_weights(const std::vector<double>& w, double w0);

/// Per-cell loss weights: w~_i where the label is positive, 1 where negative.
Mat weight_matrix(const std::vector<double>& w_tilde, const Mat& labels);

enum class SchedulerKind { none, linear, exponential, alternating, mixed };

struct SchedulerState {
  SchedulerKind kind = SchedulerKind::none;
  double k_exp = 3.0;
  double lambda = 0.5;  // mixed objective only
  std::size_t n_steps = 1;
  std::size_t t = 0;
};

/// Effective per-node weights at batch t of an epoch. Linear and exponential
/// schedules return w~ exactly at t=0 and exactly 1 at t=n_steps-1.
/// Alternating returns w~ on even t and all-ones on odd t. none and mixed
/// leave the weights untouched.
std::vector<double> scheduled_weights(const std::vector<double>& w_tilde, const SchedulerState& s);

/// lambda * loss_weighted + (1 - lambda) * loss_unweighted, elementwise.
Mat mixed_loss(const Mat& loss_weighted, const Mat& loss_unweighted, double lambda);

}  // namespace hml

#endif  // HML_IMBALANCE_HPP
