#include "hml/resample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>

#include "hml/errors.hpp"
#include "hml/rng.hpp"

namespace hml {

ResamplePlan lpros(const Mat& labels, double pct, std::uint64_t seed) {
  if (pct < 0.0) throw Error("lpros: pct must be non-negative");
  ResamplePlan plan;
  plan.method = ResampleMethod::lpros;
  plan.indices.resize(labels.rows);
  std::iota(plan.indices.begin(), plan.indices.end(), 0);
  if (labels.rows == 0) return plan;

  // Group rows by full label pattern; map keeps the grouping deterministic.
  std::map<std::vector<char>, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < labels.rows; ++r) {
    std::vector<char> key(labels.cols);
    for (std::size_t c = 0; c < labels.cols; ++c) key[c] = labels(r, c) != 0.0 ? 1 : 0;
    groups[std::move(key)].push_back(r);
  }

  const double mean_count =
      static_cast<double>(labels.rows) / static_cast<double>(groups.size());
  std::size_t budget = static_cast<std::size_t>(
      std::floor(pct * static_cast<double>(labels.rows)));

  struct GroupRef {
    const std::vector<std::size_t>* rows;
    std::size_t count;
  };
  std::vector<GroupRef> below;
  for (const auto& [key, rows] : groups)
    if (static_cast<double>(rows.size()) < mean_count) below.push_back({&rows, rows.size()});
  // Rarest first; the first-occurrence row index breaks ties deterministically.
  std::sort(below.begin(), below.end(), [](const GroupRef& a, const GroupRef& b) {
    if (a.count != b.count) return a.count < b.count;
    return a.rows->front() < b.rows->front();
  });

  Rng rng(seed, 7);
  for (GroupRef& g : below) {
    while (static_cast<double>(g.count) < mean_count && budget > 0) {
      const std::size_t pick = static_cast<std::size_t>(rng.uniform_int(g.rows->size()));
      plan.indices.push_back((*g.rows)[pick]);
      ++g.count;
      --budget;
    }
    if (budget == 0) break;
  }
  return plan;
}

ResamplePlan hros_pd(const Mat& labels, const Hierarchy& h, std::uint64_t seed) {
  if (labels.cols != h.size())
    throw ShapeError("hros_pd: " + std::to_string(labels.cols) + " columns for " +
                     std::to_string(h.size()) + " nodes");
  ResamplePlan plan;
  plan.method = ResampleMethod::hros_pd;
  plan.indices.resize(labels.rows);
  std::iota(plan.indices.begin(), plan.indices.end(), 0);
  if (labels.rows == 0) return plan;

  for (std::size_t i = 0; i < h.size(); ++i)
    if (h.parents[i].size() > 1) {
      std::fprintf(stderr,
                   "warning: hros-pd on a DAG hierarchy; the method targets trees\n");
      break;
    }

  std::vector<std::size_t> counts(h.size(), 0);
  for (std::size_t r = 0; r < labels.rows; ++r)
    for (std::size_t c = 0; c < labels.cols; ++c)
      if (labels(r, c) != 0.0) ++counts[c];

  const auto ir_of = [&counts](std::size_t node) {
    const std::size_t n_max = *std::max_element(counts.begin(), counts.end());
    return static_cast<double>(n_max) / static_cast<double>(counts[node]);
  };

  double ir_sum = 0.0;
  std::size_t seen = 0;
  std::vector<std::pair<double, std::size_t>> rare;  // (original IR, node)
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (counts[i] == 0) {
      std::fprintf(stderr, "warning: node %zu has no observations, skipped by hros-pd\n", i);
      continue;
    }
    ir_sum += ir_of(i);
    ++seen;
  }
  if (seen == 0) return plan;
  const double mean_ir = ir_sum / static_cast<double>(seen);
  for (std::size_t i = 0; i < h.size(); ++i)
    if (counts[i] > 0 && ir_of(i) > mean_ir) rare.push_back({ir_of(i), i});
  std::sort(rare.begin(), rare.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  // Rows whose deepest positive is the node: positive there, no positive
  // strict descendant.
  const auto eligible_rows = [&](std::size_t node) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < labels.rows; ++r) {
      if (labels(r, node) == 0.0) continue;
      bool deepest = true;
      for (std::size_t d : h.descendants[node])
        if (d != node && labels(r, d) != 0.0) {
          deepest = false;
          break;
        }
      if (deepest) rows.push_back(r);
    }
    return rows;
  };

  Rng rng(seed, 8);
  for (auto& [ir0, node] : rare) {
    const std::vector<std::size_t> rows = eligible_rows(node);
    if (rows.empty()) continue;
    while (ir_of(node) > mean_ir) {
      const std::size_t pick = rows[static_cast<std::size_t>(rng.uniform_int(rows.size()))];
      plan.indices.push_back(pick);
      for (std::size_t c = 0; c < labels.cols; ++c)
        if (labels(pick, c) != 0.0) ++counts[c];
    }
  }
  return plan;
}

NodeFrequencies weights_after_resample(const ResamplePlan& plan, const Mat& labels) {
  return node_frequencies(take_rows(labels, plan.indices));
}

}  // namespace hml
