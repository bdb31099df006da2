#ifndef HML_RESAMPLE_HPP
#define HML_RESAMPLE_HPP

#include <cstdint>
#include <vector>

#include "hml/hierarchy.hpp"
#include "hml/mat.hpp"

namespace hml {

enum class ResampleMethod { lpros, hros_pd };

/// Row-index multiset over the source dataset: the originals in order,
/// followed by the clones. Apply with take_rows.
struct ResamplePlan {
  ResampleMethod method = ResampleMethod::lpros;
  std::vector<std::size_t> indices;
};

/// Labelset-powerset oversampling. Each distinct label row is one labelset;
/// labelsets below the mean count are cloned rarest-first (uniformly random
/// instances) until they reach the mean or the budget of floor(pct * rows)
/// added rows runs out.
ResamplePlan lpros(const Mat& labels, double pct, std::uint64_t seed);

/// Per-node imbalance-ratio oversampling. IR_i = n_max / n_i; nodes above the
/// mean IR (frozen from the original counts) are handled rarest-first by
/// cloning rows whose deepest positive node is that node, with counts updated
/// as clones land, until the node's IR falls to the mean or no row qualifies.
ResamplePlan hros_pd(const Mat& labels, const Hierarchy& h, std::uint64_t seed);

/// Node frequencies over the resampled multiset; feeds the imbalance weights.
NodeFrequencies weights_after_resample(const ResamplePlan& plan, const Mat& labels);

}  // namespace hml

#endif  // HML_RESAMPLE_HPP
