#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "helpers.hpp"
#include "hml/errors.hpp"
#include "hml/resample.hpp"

using namespace hml;

namespace {

Hierarchy chain3() {
  return build_hierarchy({"a", "b", "c"},
                         {{std::size_t{0}, std::size_t{1}}, {std::size_t{1}, std::size_t{2}}});
}

/// Rows: 5x {a}, 4x {a,b}, 1x {a,b,c}; node counts 10 / 5 / 1.
Mat chain_labels() {
  Mat y(10, 3);
  for (std::size_t r = 0; r < 10; ++r) y(r, 0) = 1.0;
  for (std::size_t r = 5; r < 10; ++r) y(r, 1) = 1.0;
  y(9, 2) = 1.0;
  return y;
}

std::map<std::vector<char>, std::size_t> group_counts(const Mat& labels) {
  std::map<std::vector<char>, std::size_t> g;
  for (std::size_t r = 0; r < labels.rows; ++r) {
    std::vector<char> key(labels.cols);
    for (std::size_t c = 0; c < labels.cols; ++c) key[c] = labels(r, c) != 0.0 ? 1 : 0;
    ++g[key];
  }
  return g;
}

}  // namespace

TEST_CASE("lpros leaves balanced data untouched") {
  Mat y(4, 2);
  y(0, 0) = 1.0;
  y(1, 0) = 1.0;
  y(2, 1) = 1.0;
  y(3, 1) = 1.0;  // two labelsets, two rows each
  ResamplePlan plan = lpros(y, 1.0, 5);
  REQUIRE(plan.indices.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(plan.indices[i] == i);
}

TEST_CASE("lpros with zero budget is the identity") {
  Mat y(10, 2);
  for (std::size_t r = 0; r < 8; ++r) y(r, 0) = 1.0;
  for (std::size_t r = 8; r < 10; ++r) y(r, 1) = 1.0;
  SUBCASE("pct zero") {
    ResamplePlan plan = lpros(y, 0.0, 1);
    CHECK(plan.indices.size() == 10);
  }
  SUBCASE("pct too small to yield one row") {
    ResamplePlan plan = lpros(y, 0.05, 1);
    CHECK(plan.indices.size() == 10);
  }
}

TEST_CASE("lpros clones the rare labelset up to the mean") {
  // Labelsets sized 8 and 2; mean 5, so the small one needs 3 clones.
  Mat y(10, 2);
  for (std::size_t r = 0; r < 8; ++r) y(r, 0) = 1.0;
  for (std::size_t r = 8; r < 10; ++r) y(r, 1) = 1.0;
  ResamplePlan plan = lpros(y, 1.0, 5);
  REQUIRE(plan.indices.size() == 13);
  for (std::size_t i = 0; i < 10; ++i) CHECK(plan.indices[i] == i);
  for (std::size_t i = 10; i < 13; ++i) CHECK(plan.indices[i] >= 8);

  Mat resampled = take_rows(y, plan.indices);
  auto groups = group_counts(resampled);
  for (const auto& [key, count] : groups) CHECK(count >= 5);
}

TEST_CASE("lpros budget caps the number of clones") {
  Mat y(10, 2);
  for (std::size_t r = 0; r < 8; ++r) y(r, 0) = 1.0;
  for (std::size_t r = 8; r < 10; ++r) y(r, 1) = 1.0;
  ResamplePlan plan = lpros(y, 0.1, 5);  // budget floor(1.0) = 1
  CHECK(plan.indices.size() == 11);
  CHECK(plan.indices[10] >= 8);
}

TEST_CASE("lpros serves the rarest labelset first") {
  // Group sizes 4 / 2 / 1 over 7 rows; budget 1 must go to the singleton.
  Mat y(7, 3);
  for (std::size_t r = 0; r < 4; ++r) y(r, 0) = 1.0;
  for (std::size_t r = 4; r < 6; ++r) y(r, 1) = 1.0;
  y(6, 2) = 1.0;
  ResamplePlan plan = lpros(y, 0.15, 3);
  REQUIRE(plan.indices.size() == 8);
  CHECK(plan.indices[7] == 6);
}

TEST_CASE("lpros respects the added-row budget on random data") {
  hml::Rng rng(60);
  for (int it = 0; it < 50; ++it) {
    Hierarchy h = hml_test::random_dag(rng, 8);
    const std::size_t rows = 1 + rng.uniform_int(40);
    Mat y = hml_test::random_labels(rng, rows, h);
    const double pct = rng.uniform(0.0, 2.0);
    ResamplePlan plan = lpros(y, pct, it);
    const std::size_t added = plan.indices.size() - rows;
    CHECK(added <= static_cast<std::size_t>(std::floor(pct * static_cast<double>(rows))));
    for (std::size_t idx : plan.indices) CHECK(idx < rows);
    for (std::size_t i = 0; i < rows; ++i) CHECK(plan.indices[i] == i);
  }
}

TEST_CASE("lpros rejects a negative percentage") {
  Mat y(2, 1);
  CHECK_THROWS_AS(lpros(y, -0.5, 0), Error);
}

TEST_CASE("lpros is deterministic per seed") {
  hml::Rng rng(61);
  Hierarchy h = hml_test::random_dag(rng, 6);
  Mat y = hml_test::random_labels(rng, 30, h);
  ResamplePlan a = lpros(y, 1.5, 99);
  ResamplePlan b = lpros(y, 1.5, 99);
  CHECK(a.indices == b.indices);
}

TEST_CASE("hros-pd leaves balanced data untouched") {
  Hierarchy h = build_hierarchy({"a", "b"}, std::vector<std::pair<std::size_t, std::size_t>>{});
  Mat y(4, 2);
  for (std::size_t r = 0; r < 4; ++r) {
    y(r, 0) = 1.0;
    y(r, 1) = 1.0;
  }
  ResamplePlan plan = hros_pd(y, h, 3);
  CHECK(plan.indices.size() == 4);
}

TEST_CASE("hros-pd pulls the rarest node's ratio down to the frozen mean") {
  Hierarchy h = chain3();
  Mat y = chain_labels();
  // Ratios 1 / 2 / 10, mean 13/3. Only the deep node exceeds it; two clones
  // of the single eligible row bring (10+c)/(1+c) under the mean.
  ResamplePlan plan = hros_pd(y, h, 4);
  REQUIRE(plan.indices.size() == 12);
  CHECK(plan.indices[10] == 9);
  CHECK(plan.indices[11] == 9);

  NodeFrequencies nf = weights_after_resample(plan, y);
  CHECK(nf.counts == std::vector<std::size_t>{12, 7, 3});
  CHECK(nf.total_obs == 12);
  CHECK(static_cast<double>(nf.counts[0]) / static_cast<double>(nf.counts[2]) <= 13.0 / 3.0);
}

TEST_CASE("hros-pd terminates on extreme imbalance with one eligible row") {
  Hierarchy h = build_hierarchy({"a", "b"}, {{std::size_t{0}, std::size_t{1}}});
  Mat y(101, 2);
  for (std::size_t r = 0; r < 101; ++r) y(r, 0) = 1.0;
  y(100, 1) = 1.0;  // counts 101 / 1, ratios 1 / 101, mean 51
  ResamplePlan plan = hros_pd(y, h, 5);
  // (101+c)/(1+c) <= 51 at c = 1.
  CHECK(plan.indices.size() == 102);
  CHECK(plan.indices[101] == 100);
}

TEST_CASE("hros-pd skips nodes that never occur") {
  Hierarchy h = chain3();
  Mat y(5, 3);
  for (std::size_t r = 0; r < 5; ++r) y(r, 0) = 1.0;
  y(4, 1) = 1.0;  // deep node c never positive
  ResamplePlan plan = hros_pd(y, h, 6);
  for (std::size_t idx : plan.indices) CHECK(idx < 5);
  // Ratios over the seen nodes: 1 and 5, mean 3; node b gets cloned via its
  // single deepest-positive row until (5+c)/(1+c) <= 3, i.e. once.
  CHECK(plan.indices.size() == 6);
  CHECK(plan.indices[5] == 4);
}

TEST_CASE("hros-pd accepts a diamond hierarchy") {
  Hierarchy h = build_hierarchy({"r", "l", "m", "x"},
                                {{std::size_t{0}, std::size_t{1}},
                                 {std::size_t{0}, std::size_t{2}},
                                 {std::size_t{1}, std::size_t{3}},
                                 {std::size_t{2}, std::size_t{3}}});
  hml::Rng rng(62);
  Mat y = hml_test::random_labels(rng, 20, h, 0.4);
  bool any = false;
  for (double v : y.v) any = any || v != 0.0;
  if (!any) y(0, 0) = 1.0;
  ResamplePlan plan = hros_pd(y, h, 7);
  CHECK(plan.indices.size() >= 20);
  for (std::size_t idx : plan.indices) CHECK(idx < 20);
}

TEST_CASE("hros-pd is deterministic per seed and the plan starts with the originals") {
  hml::Rng rng(63);
  Hierarchy h = hml_test::random_dag(rng, 7);
  Mat y = hml_test::random_labels(rng, 25, h);
  bool any = false;
  for (double v : y.v) any = any || v != 0.0;
  if (!any) y(0, 0) = 1.0;
  ResamplePlan a = hros_pd(y, h, 42);
  ResamplePlan b = hros_pd(y, h, 42);
  CHECK(a.indices == b.indices);
  for (std::size_t i = 0; i < 25; ++i) CHECK(a.indices[i] == i);
}

TEST_CASE("hros-pd rejects mismatched label width") {
  Hierarchy h = chain3();
  Mat y(4, 2);
  CHECK_THROWS_AS(hros_pd(y, h, 0), ShapeError);
}

TEST_CASE("resampled weights match a direct recount of the applied plan") {
  hml::Rng rng(64);
  Hierarchy h = hml_test::random_dag(rng, 6);
  Mat y = hml_test::random_labels(rng, 15, h);
  ResamplePlan plan = lpros(y, 1.0, 8);
  NodeFrequencies nf = weights_after_resample(plan, y);
  NodeFrequencies direct = node_frequencies(take_rows(y, plan.indices));
  CHECK(nf.counts == direct.counts);
  CHECK(nf.total_obs == direct.total_obs);
}
