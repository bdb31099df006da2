#ifndef HML_HIERARCHY_HPP
#define HML_HIERARCHY_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hml/mat.hpp"

namespace hml {

/// Immutable label DAG. Node order is the column order of every label and
/// probability matrix in the library.
struct Hierarchy {
  std::vector<std::string> node_ids;
  std::unordered_map<std::string, std::size_t> index_of;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (parent, child)
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::vector<std::size_t>> parents;
  /// descendants[i]: sorted indices of the reflexive-transitive closure, i included.
  std::vector<std::vector<std::size_t>> descendants;
  /// Longest path from a root; roots have depth 0.
  std::vector<int> depth;
  /// Parents before children.
  std::vector<std::size_t> topo_order;

  std::size_t size() const { return node_ids.size(); }
};

/// Builds the DAG from index edges. Throws UnknownNode for out-of-range
/// endpoints and CyclicHierarchy when the edge relation has a cycle.
Hierarchy build_hierarchy(std::vector<std::string> nodes,
                          const std::vector<std::pair<std::size_t, std::size_t>>& edges);

/// Same, with (parent_id, child_id) string edges.
Hierarchy build_hierarchy(std::vector<std::string> nodes,
                          const std::vector<std::pair<std::string, std::string>>& edges);

/// N×N binary matrix, entry (i,j) = 1 iff j is in the descendant closure of i.
Mat descendant_matrix(const Hierarchy& h);

/// Ancestor closure: every ancestor of a positive node becomes positive.
/// Idempotent. Throws ShapeError when width differs from the node count.
Mat close_labels(const Mat& labels, const Hierarchy& h);

struct NodeFrequencies {
  std::vector<std::size_t> counts;
  std::size_t total_obs = 0;
  std::vector<double> freq;
};

/// Column sums of an ancestor-closed label matrix.
NodeFrequencies node_frequencies(const Mat& labels);

}  // namespace hml

#endif  // HML_HIERARCHY_HPP
