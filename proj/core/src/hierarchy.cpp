#include "hml/hierarchy.hpp"

#include <algorithm>
#include <queue>

#include "hml/errors.hpp"

namespace hml {

Hierarchy build_hierarchy(std::vector<std::string> nodes,
                          const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Hierarchy h;
  h.node_ids = std::move(nodes);
  const std::size_t n = h.node_ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = h.index_of.emplace(h.node_ids[i], i);
    if (!inserted) throw Error("duplicate node id: " + h.node_ids[i]);
  }
  h.children.resize(n);
  h.parents.resize(n);
  for (auto [p, c] : edges) {
    if (p >= n || c >= n)
      throw UnknownNode("edge endpoint out of range: (" + std::to_string(p) + ", " +
                        std::to_string(c) + ")");
    h.edges.emplace_back(p, c);
    h.children[p].push_back(c);
    h.parents[c].push_back(p);
  }

  // Kahn topological sort; leftover nodes mean a cycle.
  std::vector<std::size_t> indeg(n, 0);
  for (auto& [p, c] : h.edges) ++indeg[c];
  std::queue<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(i);
  h.topo_order.reserve(n);
  while (!ready.empty()) {
    std::size_t u = ready.front();
    ready.pop();
    h.topo_order.push_back(u);
    for (std::size_t c : h.children[u])
      if (--indeg[c] == 0) ready.push(c);
  }
  if (h.topo_order.size() != n) throw CyclicHierarchy("label hierarchy contains a cycle");

  h.depth.assign(n, 0);
  for (std::size_t u : h.topo_order)
    for (std::size_t c : h.children[u]) h.depth[c] = std::max(h.depth[c], h.depth[u] + 1);

  // Closure in reverse topological order: S_i = {i} union S_c over children.
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (auto it = h.topo_order.rbegin(); it != h.topo_order.rend(); ++it) {
    std::size_t u = *it;
    reach[u][u] = 1;
    for (std::size_t c : h.children[u])
      for (std::size_t j = 0; j < n; ++j) reach[u][j] |= reach[c][j];
  }
  h.descendants.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i][j]) h.descendants[i].push_back(j);
  return h;
}

Hierarchy build_hierarchy(std::vector<std::string> nodes,
                          const std::vector<std::pair<std::string, std::string>>& edges) {
  std::unordered_map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < nodes.size(); ++i) idx.emplace(nodes[i], i);
  std::vector<std::pair<std::size_t, std::size_t>> iedges;
  iedges.reserve(edges.size());
  for (auto& [p, c] : edges) {
    auto pi = idx.find(p);
    if (pi == idx.end()) throw UnknownNode("unknown node id: " + p);
    auto ci = idx.find(c);
    if (ci == idx.end()) throw UnknownNode("unknown node id: " + c);
    iedges.emplace_back(pi->second, ci->second);
  }
  return build_hierarchy(std::move(nodes), iedges);
}

Mat descendant_matrix(const Hierarchy& h) {
  const std::size_t n = h.size();
  Mat a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : h.descendants[i]) a(i, j) = 1.0;
  return a;
}

Mat close_labels(const Mat& labels, const Hierarchy& h) {
  if (labels.cols != h.size())
    throw ShapeError("close_labels: " + std::to_string(labels.cols) + " columns for " +
                     std::to_string(h.size()) + " nodes");
  Mat out = labels;
  for (std::size_t b = 0; b < out.rows; ++b) {
    double* row = out.row_ptr(b);
    // Children before parents, so positives propagate the whole way up.
    for (auto it = h.topo_order.rbegin(); it != h.topo_order.rend(); ++it) {
      std::size_t c = *it;
      if (row[c] != 0.0)
        for (std::size_t p : h.parents[c]) row[p] = 1.0;
    }
  }
  return out;
}

NodeFrequencies node_frequencies(const Mat& labels) {
  NodeFrequencies nf;
  nf.total_obs = labels.rows;
  nf.counts.assign(labels.cols, 0);
  for (std::size_t b = 0; b < labels.rows; ++b) {
    const double* row = labels.row_ptr(b);
    for (std::size_t j = 0; j < labels.cols; ++j)
      if (row[j] != 0.0) ++nf.counts[j];
  }
  nf.freq.assign(labels.cols, 0.0);
  if (nf.total_obs > 0)
    for (std::size_t j = 0; j < labels.cols; ++j)
      nf.freq[j] = static_cast<double>(nf.counts[j]) / static_cast<double>(nf.total_obs);
  return nf;
}

}  // namespace hml
