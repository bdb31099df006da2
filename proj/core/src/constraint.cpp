#include "hml/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hml/errors.hpp"

namespace hml {

namespace {

void check_width(const Mat& m, const Hierarchy& h, const char* what) {
  if (m.cols != h.size())
    throw ShapeError(std::string(what) + ": " + std::to_string(m.cols) + " columns for " +
                     std::to_string(h.size()) + " nodes");
}

}  // namespace

Mat f_cm(const Mat& probs, const Hierarchy& h) {
  check_width(probs, h, "f_cm");
  Mat out(probs.rows, probs.cols);
  for (std::size_t b = 0; b < probs.rows; ++b) {
    const double* in = probs.row_ptr(b);
    double* o = out.row_ptr(b);
    for (std::size_t i = 0; i < probs.cols; ++i) {
      double m = in[h.descendants[i][0]];
      for (std::size_t idx = 1; idx < h.descendants[i].size(); ++idx)
        m = std::max(m, in[h.descendants[i][idx]]);
      o[i] = m;
    }
  }
  return out;
}

ConstrainedOutputs mcm_forward(const Mat& raw_probs, const Mat& labels, const Hierarchy& h) {
  check_width(raw_probs, h, "mcm_forward");
  check_same_shape(raw_probs, labels, "mcm_forward");
  ConstrainedOutputs out;
  out.y_a = f_cm(raw_probs, h);
  out.y_b = f_cm(hadamard(labels, raw_probs), h);
  out.y_tilde = Mat(raw_probs.rows, raw_probs.cols);
  for (std::size_t i = 0; i < raw_probs.v.size(); ++i)
    out.y_tilde.v[i] = (1.0 - labels.v[i]) * out.y_a.v[i] + out.y_b.v[i];
  return out;
}

Mat mc_loss(const Mat& y_tilde, const Mat& labels) {
  check_same_shape(y_tilde, labels, "mc_loss");
  Mat out(y_tilde.rows, y_tilde.cols);
  for (std::size_t i = 0; i < y_tilde.v.size(); ++i) {
    const double p = std::clamp(y_tilde.v[i], kProbEps, 1.0 - kProbEps);
    const double y = labels.v[i];
    out.v[i] = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return out;
}

Mat predict(const Mat& raw_probs, const Hierarchy& h, double threshold) {
  Mat constrained = f_cm(raw_probs, h);
  for (double& x : constrained.v) x = (x >= threshold) ? 1.0 : 0.0;
  return constrained;
}

}  // namespace hml
