#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "brepmatch/errors.hpp"

namespace brepmatch {

// Deterministic within-delta retrieval over D-dimensional points.
//
// D+1 uniform grids of cell edge (D+1)*delta are laid over the points, grid g
// shifted by g*delta along every axis. Two points within delta of each other
// always share a cell in at least one grid; co-celled points are at most
// (D+1)*sqrt(D)*delta apart, so query() filters candidates by exact distance.
template <std::size_t D>
class ShiftedGridIndex {
public:
  using Point = std::array<double, D>;
  using Id = std::int64_t;
  using Cell = std::array<std::int64_t, D>;

  static constexpr std::size_t kGrids = D + 1;

  ShiftedGridIndex() = default;

  static ShiftedGridIndex build(std::vector<std::pair<Id, Point>> points, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw InvalidTolerance("delta must be a positive finite number");
    ShiftedGridIndex index;
    index.delta_ = delta;
    index.points_ = std::move(points);
    std::unordered_set<Id> seen;
    seen.reserve(index.points_.size() * 2);
    for (const auto& [id, p] : index.points_)
      if (!seen.insert(id).second) throw DuplicateId("id " + std::to_string(id) + " appears twice");
    for (std::size_t g = 0; g < kGrids; ++g) {
      auto& grid = index.grids_[g];
      grid.reserve(index.points_.size());
      for (std::size_t slot = 0; slot < index.points_.size(); ++slot)
        grid[index.cell_of(index.points_[slot].second, g)].push_back(slot);
    }
    return index;
  }

  double delta() const { return delta_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<std::pair<Id, Point>>& points() const { return points_; }

  // Cell coordinate of p in grid g: floor((p - g*delta) / ((D+1)*delta)).
  Cell cell_of(const Point& p, std::size_t g) const {
    const double edge = static_cast<double>(D + 1) * delta_;
    const double shift = static_cast<double>(g) * delta_;
    Cell c;
    for (std::size_t k = 0; k < D; ++k) c[k] = static_cast<std::int64_t>(std::floor((p[k] - shift) / edge));
    return c;
  }

  std::size_t cell_count(std::size_t g) const { return grids_[g].size(); }

  // Number of cells (over all grids) whose member list contains the point at
  // storage slot `slot`.
  std::size_t memberships(std::size_t slot) const {
    std::size_t n = 0;
    for (std::size_t g = 0; g < kGrids; ++g) {
      auto it = grids_[g].find(cell_of(points_[slot].second, g));
      if (it != grids_[g].end())
        n += static_cast<std::size_t>(std::count(it->second.begin(), it->second.end(), slot));
    }
    return n;
  }

  // Union over grids of the ids co-celled with p, before distance filtering.
  // Ascending id order.
  std::vector<Id> candidates(const Point& p) const {
    std::vector<std::size_t> slots = candidate_slots(p);
    std::vector<Id> ids;
    ids.reserve(slots.size());
    for (std::size_t s : slots) ids.push_back(points_[s].first);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  // Ids of stored points with Euclidean distance <= delta to p, ascending.
  std::vector<Id> query(const Point& p) const { return query(p, delta_); }

  // Same, with a filter radius r <= delta (candidates are complete only up to delta).
  std::vector<Id> query(const Point& p, double r) const {
    std::vector<Id> ids;
    for (std::size_t s : candidate_slots(p))
      if (distance(p, points_[s].second) <= r) ids.push_back(points_[s].first);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  static double distance(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < D; ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return std::sqrt(s);
  }

private:
  struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept {
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (auto v : c) {
        h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0x100000001b3ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };

  std::vector<std::size_t> candidate_slots(const Point& p) const {
    std::vector<std::size_t> slots;
    for (std::size_t g = 0; g < kGrids; ++g) {
      auto it = grids_[g].find(cell_of(p, g));
      if (it == grids_[g].end()) continue;
      slots.insert(slots.end(), it->second.begin(), it->second.end());
    }
    std::sort(slots.begin(), slots.end());
    slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
    return slots;
  }

  double delta_ = 1.0;
  std::vector<std::pair<Id, Point>> points_;
  std::array<std::unordered_map<Cell, std::vector<std::size_t>, CellHash>, kGrids> grids_;
};

using PointIndex3 = ShiftedGridIndex<3>;

}  // namespace brepmatch
