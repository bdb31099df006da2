#ifndef HML_CONSTRAINT_HPP
#define HML_CONSTRAINT_HPP

#include "hml/hierarchy.hpp"
#include "hml/mat.hpp"

namespace hml {

/// Clamp bound for probabilities entering a log.
inline constexpr double kProbEps = 1e-7;

struct ConstrainedOutputs {
  Mat y_a;      // descendant max of the raw probabilities; the inference output
  Mat y_b;      // descendant max restricted to positive nodes
  Mat y_tilde;  // (1 - labels) * y_a + y_b; the training-side prediction
};

/// out[b,i] = max of probs[b,j] over the descendant closure of i.
/// Output satisfies out[parent] >= out[child] on every edge.
Mat f_cm(const Mat& probs, const Hierarchy& h);

/// The constrained forward pass. labels must be ancestor-closed. At positive
/// nodes y_tilde takes the max over positive descendants only, so a negative
/// child never lifts its positive parent's training prediction.
ConstrainedOutputs mcm_forward(const Mat& raw_probs, const Mat& labels, const Hierarchy& h);

/// Unreduced elementwise binary cross-entropy with p clamped to
/// [kProbEps, 1 - kProbEps]. Reduction is the trainer's job.
Mat mc_loss(const Mat& y_tilde, const Mat& labels);

/// Binarize f_cm(raw_probs) at the threshold (>= threshold counts positive).
/// The result is ancestor-consistent.
Mat predict(const Mat& raw_probs, const Hierarchy& h, double threshold = 0.5);

}  // namespace hml

#endif  // HML_CONSTRAINT_HPP
