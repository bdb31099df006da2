#ifndef HML_UNCERTAINTY_HPP
#define HML_UNCERTAINTY_HPP

#include <vector>

#include "hml/mat.hpp"

namespace hml {

/// Per-member probabilities plus the moments the focal weights consume.
/// var is the population variance (divide by M), stable down to M = 2.
struct EnsembleOutput {
  std::vector<Mat> member_probs;
  Mat mean;
  Mat var;
};

/// Throws InsufficientEnsemble when members is empty or shapes disagree.
EnsembleOutput ensemble_stats(std::vector<Mat> member_probs);

/// U = 1 - 2*(max(mu, 1-mu) - 0.5). Identically 2*min(mu, 1-mu), in [0,1].
Mat u_bbma(const EnsembleOutput& e);

/// Margin-to-noise uncertainty: SNR = (max(mu,1-mu) - min(mu,1-mu)) / (2*sigma),
/// U = 1 - (2*max(mu,1-mu) - 1) * (1 - exp(-SNR)). Zero margin gives SNR = 0;
/// positive margin over near-zero sigma gives SNR = +inf. U stays in [0,1].
Mat u_gmu(const EnsembleOutput& e);

enum class Divergence { kl, js };

/// Mean pairwise divergence between members' Bernoulli outputs per cell:
/// U = (1/(M(M-1))) * sum over ordered pairs. kl uses natural logs and is
/// unbounded above; js uses base-2 logs and stays in [0,1]. Probabilities are
/// clamped away from {0,1} first. Throws InsufficientEnsemble when M < 2.
Mat u_epistemic(const std::vector<Mat>& member_probs, Divergence d);

struct FocalWeights {
  Mat u;
  double u0 = 0.25;
  double k = 1.0;
  Mat combined;  // u0 + u^k; used as a constant, never differentiated through
};

FocalWeights focal_weights(const Mat& u, double u0, double k);

}  // namespace hml

#endif  // HML_UNCERTAINTY_HPP
