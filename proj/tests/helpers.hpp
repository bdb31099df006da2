#ifndef HML_TESTS_HELPERS_HPP
#define HML_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "hml/hierarchy.hpp"
#include "hml/mat.hpp"
#include "hml/rng.hpp"

namespace hml_test {

/// Random DAG with 1..max_nodes nodes. Nodes are created in index order and
/// edges always point to a higher index, so the result is acyclic; extra
/// cross edges make it a proper DAG about half the time.
inline hml::Hierarchy random_dag(hml::Rng& rng, std::size_t max_nodes) {
  const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(max_nodes));
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "n" + std::to_string(i);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 1; i < n; ++i)
    edges.emplace_back(static_cast<std::size_t>(rng.uniform_int(i)), i);
  const std::size_t extra = static_cast<std::size_t>(rng.uniform_int(n));
  for (std::size_t k = 0; k < extra; ++k) {
    const std::size_t u = static_cast<std::size_t>(rng.uniform_int(n));
    const std::size_t v = static_cast<std::size_t>(rng.uniform_int(n));
    if (u < v) edges.emplace_back(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return hml::build_hierarchy(ids, edges);
}

inline hml::Mat random_probs(hml::Rng& rng, std::size_t rows, std::size_t cols) {
  hml::Mat m(rows, cols);
  for (double& x : m.v) x = rng.uniform();
  return m;
}

inline hml::Mat random_labels(hml::Rng& rng, std::size_t rows, const hml::Hierarchy& h,
                              double p = 0.3) {
  hml::Mat m(rows, h.size());
  for (double& x : m.v) x = rng.uniform() < p ? 1.0 : 0.0;
  return hml::close_labels(m, h);
}

/// Descendant closure by explicit DFS over the child lists.
inline std::set<std::size_t> dfs_descendants(const hml::Hierarchy& h, std::size_t start) {
  std::set<std::size_t> seen;
  std::vector<std::size_t> stack = {start};
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (!seen.insert(u).second) continue;
    for (std::size_t c : h.children[u]) stack.push_back(c);
  }
  return seen;
}

/// Rectangle-rule AP by rescanning the whole array at every distinct
/// threshold. Quadratic, independent of the production implementation.
inline double ap_oracle(const std::vector<double>& scores, const std::vector<double>& labels) {
  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double total_pos = 0.0;
  for (double y : labels) total_pos += (y != 0.0) ? 1.0 : 0.0;
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        if (labels[i] != 0.0)
          tp += 1.0;
        else
          fp += 1.0;
      }
    }
    const double recall = tp / total_pos;
    const double precision = tp / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

/// Mean pairwise divergence by the literal ordered double loop.
inline double pairwise_divergence_oracle(const std::vector<double>& member_ps, bool js) {
  const std::size_t m = member_ps.size();
  auto clamp = [](double p) { return std::min(std::max(p, 1e-7), 1.0 - 1e-7); };
  double acc = 0.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      const double p = clamp(member_ps[a]);
      const double q = clamp(member_ps[b]);
      if (js) {
        const double mid = 0.5 * (p + q);
        auto kl2 = [](double x, double y) {
          return x * std::log2(x / y) + (1.0 - x) * std::log2((1.0 - x) / (1.0 - y));
        };
        acc += 0.5 * kl2(p, mid) + 0.5 * kl2(q, mid);
      } else {
        acc += p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
      }
    }
  return acc / (static_cast<double>(m) * static_cast<double>(m - 1));
}

inline double max_rel_err(const hml::Mat& a, const hml::Mat& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double scale = std::max({std::abs(a.v[i]), std::abs(b.v[i]), 1e-8});
    worst = std::max(worst, std::abs(a.v[i] - b.v[i]) / scale);
  }
  return worst;
}

}  // namespace hml_test

#endif  // HML_TESTS_HELPERS_HPP
