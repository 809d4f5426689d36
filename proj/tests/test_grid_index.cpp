#include <gtest/gtest.h>

#include <cmath>

#include "brepmatch/grid_index.hpp"
#include "brepmatch/rng.hpp"

using namespace brepmatch;

namespace {

using P = PointIndex3::Point;

P random_point(Rng& rng, double lo = 0.0, double hi = 1.0) { return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)}; }

P offset_at_distance(Rng& rng, const P& p, double r) {
  // uniform direction via normalized Gaussian-free rejection
  double x, y, z, n;
  do {
    x = rng.uniform(-1, 1);
    y = rng.uniform(-1, 1);
    z = rng.uniform(-1, 1);
    n = std::sqrt(x * x + y * y + z * z);
  } while (n < 1e-3 || n > 1.0);
  return {p[0] + r * x / n, p[1] + r * y / n, p[2] + r * z / n};
}

}  // namespace

TEST(GridIndex, OneDimensionalAnalogueSharesGridZeroCell) {
  const auto idx = PointIndex3::build({{1, {0.4, 0, 0}}, {2, {1.2, 0, 0}}}, 1.0);
  EXPECT_EQ(idx.cell_of({0.4, 0, 0}, 0), idx.cell_of({1.2, 0, 0}, 0));
  EXPECT_EQ(idx.cell_of({0.4, 0, 0}, 0)[0], 0);
}

TEST(GridIndex, EmptyIndexHasFourEmptyGrids) {
  const auto idx = PointIndex3::build({}, 0.5);
  EXPECT_EQ(PointIndex3::kGrids, 4u);
  for (std::size_t g = 0; g < PointIndex3::kGrids; ++g) EXPECT_EQ(idx.cell_count(g), 0u);
  EXPECT_TRUE(idx.query({0, 0, 0}).empty());
}

TEST(GridIndex, BuildErrors) {
  EXPECT_THROW(PointIndex3::build({}, 0.0), InvalidTolerance);
  EXPECT_THROW(PointIndex3::build({}, -1.0), InvalidTolerance);
  EXPECT_THROW(PointIndex3::build({{3, {0, 0, 0}}, {3, {1, 1, 1}}}, 1.0), DuplicateId);
}

TEST(GridIndex, EveryPointInExactlyFourCells) {
  Rng rng(5);
  std::vector<std::pair<PointIndex3::Id, P>> pts;
  for (int i = 0; i < 100000; ++i) pts.emplace_back(i, random_point(rng));
  const auto idx = PointIndex3::build(pts, 1e-3);
  for (std::size_t s = 0; s < idx.size(); s += 97) ASSERT_EQ(idx.memberships(s), 4u);
}

TEST(GridIndex, CellFormula) {
  const double delta = 0.25;
  const auto idx = PointIndex3::build({}, delta);
  const P p{1.3, -0.7, 2.0};
  for (std::size_t g = 0; g < 4; ++g) {
    const auto c = idx.cell_of(p, g);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(c[k], static_cast<std::int64_t>(std::floor((p[k] - g * delta) / (4 * delta))));
  }
}

TEST(GridIndex, QueryBasics) {
  const auto idx = PointIndex3::build({{7, {0, 0, 0}}, {8, {0.5, 0.5, 0.5}}}, 1.0);
  EXPECT_EQ(idx.query({0, 0, 0}), (std::vector<PointIndex3::Id>{7, 8}));
  EXPECT_TRUE(idx.query({10, 0, 0}).empty());
}

// Completeness, soundness and the pre-filter bound against brute force.
TEST(GridIndex, MatchesBruteForce) {
  Rng rng(11);
  const double delta = 0.03;
  std::vector<std::pair<PointIndex3::Id, P>> pts;
  for (int i = 0; i < 2000; ++i) pts.emplace_back(i, random_point(rng));
  const auto idx = PointIndex3::build(pts, delta);
  const double bound = 4.0 * std::sqrt(3.0) * delta;
  for (int q = 0; q < 400; ++q) {
    const P p = q % 2 ? random_point(rng) : offset_at_distance(rng, pts[static_cast<std::size_t>(q)].second, rng.uniform(0, delta));
    std::vector<PointIndex3::Id> brute;
    for (const auto& [id, x] : pts)
      if (PointIndex3::distance(p, x) <= delta) brute.push_back(id);
    ASSERT_EQ(idx.query(p), brute);
    for (auto id : idx.candidates(p)) ASSERT_LE(PointIndex3::distance(p, pts[static_cast<std::size_t>(id)].second), bound);
  }
}

TEST(GridIndex, RandomPairsWithinDeltaAlwaysRetrieved) {
  Rng rng(21);
  const double delta = 1e-3;
  std::size_t missed = 0;
  for (int batch = 0; batch < 10; ++batch) {
    std::vector<std::pair<PointIndex3::Id, P>> pts;
    std::vector<P> queries;
    for (int i = 0; i < 10000; ++i) {
      const P a = random_point(rng, -1, 1);
      pts.emplace_back(i, a);
      queries.push_back(offset_at_distance(rng, a, rng.uniform(0, delta)));
    }
    const auto idx = PointIndex3::build(pts, delta);
    for (int i = 0; i < 10000; ++i) {
      const auto got = idx.query(queries[static_cast<std::size_t>(i)]);
      missed += !std::binary_search(got.begin(), got.end(), i);
    }
  }
  EXPECT_EQ(missed, 0u);
}

TEST(GridIndex, SixteenDimensionalCompleteness) {
  using I16 = ShiftedGridIndex<16>;
  Rng rng(3);
  const double delta = 0.05;
  std::vector<std::pair<I16::Id, I16::Point>> pts;
  for (int i = 0; i < 300; ++i) {
    I16::Point p;
    for (auto& x : p) x = rng.uniform(0, 1);
    pts.emplace_back(i, p);
  }
  const auto idx = I16::build(pts, delta);
  for (int i = 0; i < 300; ++i) {
    I16::Point q = pts[static_cast<std::size_t>(i)].second;
    q[static_cast<std::size_t>(i % 16)] += rng.uniform(-delta, delta);
    const auto got = idx.query(q);
    EXPECT_TRUE(std::binary_search(got.begin(), got.end(), i));
  }
}
