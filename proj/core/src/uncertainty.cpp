#include "hml/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "hml/constraint.hpp"
#include "hml/errors.hpp"

namespace hml {

EnsembleOutput ensemble_stats(std::vector<Mat> member_probs) {
  if (member_probs.empty()) throw InsufficientEnsemble("ensemble_stats: no members");
  for (const Mat& m : member_probs) check_same_shape(member_probs[0], m, "ensemble_stats");
  EnsembleOutput e;
  const double m_count = static_cast<double>(member_probs.size());
  e.mean = Mat(member_probs[0].rows, member_probs[0].cols);
  for (const Mat& m : member_probs)
    for (std::size_t i = 0; i < e.mean.v.size(); ++i) e.mean.v[i] += m.v[i];
  for (double& x : e.mean.v) x /= m_count;
  e.var = Mat(e.mean.rows, e.mean.cols);
  for (const Mat& m : member_probs)
    for (std::size_t i = 0; i < e.var.v.size(); ++i) {
      const double d = m.v[i] - e.mean.v[i];
      e.var.v[i] += d * d;
    }
  for (double& x : e.var.v) x /= m_count;
  e.member_probs = std::move(member_probs);
  return e;
}

Mat u_bbma(const EnsembleOutput& e) {
  Mat u(e.mean.rows, e.mean.cols);
  for (std::size_t i = 0; i < u.v.size(); ++i) {
    const double mu = e.mean.v[i];
    u.v[i] = 1.0 - 2.0 * (std::max(mu, 1.0 - mu) - 0.5);
  }
  return u;
}

Mat u_gmu(const EnsembleOutput& e) {
  Mat u(e.mean.rows, e.mean.cols);
  for (std::size_t i = 0; i < u.v.size(); ++i) {
    const double mu = e.mean.v[i];
    const double mu_max = std::max(mu, 1.0 - mu);
    const double margin = mu_max - std::min(mu, 1.0 - mu);
    const double denom = 2.0 * std::sqrt(e.var.v[i]);
    double gate;  // 1 - exp(-SNR)
    if (margin == 0.0)
      gate = 0.0;
    else if (denom < 1e-12)
      gate = 1.0;
    else
      gate = 1.0 - std::exp(-margin / denom);
    u.v[i] = 1.0 - (2.0 * (mu_max - 0.5)) * gate;
  }
  return u;
}

namespace {

inline double clamp_p(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

inline double kl_bernoulli(double p, double q) {
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

inline double kl2_bernoulli(double p, double q) {
  return p * std::log2(p / q) + (1.0 - p) * std::log2((1.0 - p) / (1.0 - q));
}

inline double js2_bernoulli(double p, double q) {
  const double m = 0.5 * (p + q);
  return 0.5 * kl2_bernoulli(p, m) + 0.5 * kl2_bernoulli(q, m);
}

}  // namespace

Mat u_epistemic(const std::vector<Mat>& member_probs, Divergence d) {
  const std::size_t m_count = member_probs.size();
  if (m_count < 2)
    throw InsufficientEnsemble("u_epistemic needs at least 2 members, got " +
                               std::to_string(m_count));
  for (const Mat& m : member_probs) check_same_shape(member_probs[0], m, "u_epistemic");
  Mat u(member_probs[0].rows, member_probs[0].cols);
  const double norm = 1.0 / (static_cast<double>(m_count) * static_cast<double>(m_count - 1));
  for (std::size_t cell = 0; cell < u.v.size(); ++cell) {
    double acc = 0.0;
    // Unordered pairs; both KL directions are added, JS is symmetric.
    for (std::size_t a = 0; a < m_count; ++a) {
      const double p = clamp_p(member_probs[a].v[cell]);
      for (std::size_t b = a + 1; b < m_count; ++b) {
        const double q = clamp_p(member_probs[b].v[cell]);
        if (d == Divergence::kl)
          acc += kl_bernoulli(p, q) + kl_bernoulli(q, p);
        else
          acc += 2.0 * js2_bernoulli(p, q);
      }
    }
    u.v[cell] = acc * norm;
  }
  return u;
}

FocalWeights focal_weights(const Mat& u, double u0, double k) {
  FocalWeights f;
  f.u = u;
  f.u0 = u0;
  f.k = k;
  f.combined = Mat(u.rows, u.cols);
  for (std::size_t i = 0; i < u.v.size(); ++i) {
    const double uk = (k == 1.0) ? u.v[i] : std::pow(u.v[i], k);
    f.combined.v[i] = u0 + uk;
  }
  return f;
}

}  // namespace hml
