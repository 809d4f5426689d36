#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "brepmatch/brep.hpp"
#include "brepmatch/grid_index.hpp"
#include "brepmatch/matching.hpp"

namespace brepmatch {

// Default tolerance: 1e-6 of the original model's bbox diagonal.
inline double default_delta(const BRepGraph& original) { return 1e-6 * original.diagonal(); }

inline PointIndex3::Point to_point(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

// Params with the orientation-symmetric direction negated.
inline Params flipped_params(const GeometrySignature& g) {
  Params p = g.params;
  const auto layout = param_layout(g.kind);
  if (layout.sign_symmetric && layout.directions[0] >= 0)
    for (int k = 0; k < 3; ++k) p[layout.directions[0] + k] = -p[layout.directions[0] + k];
  return p;
}

inline double params_distance(const Params& a, const Params& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kParamCount; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Distance between canonical params, minimized over the direction sign where
// the class is orientation-symmetric.
inline double geometry_params_distance(const GeometrySignature& a, const GeometrySignature& b) {
  double d = params_distance(a.params, b.params);
  if (param_layout(a.kind).sign_symmetric) d = std::min(d, params_distance(a.params, flipped_params(b)));
  return d;
}

// Same class and same underlying curve/surface within delta.
inline bool same_underlying_geometry(const GeometrySignature& a, const GeometrySignature& b, double delta) {
  return a.kind == b.kind && geometry_params_distance(a, b) <= delta;
}

// max over a.samples of the distance to the nearest sample of b.
inline double directed_sample_distance(const GeometrySignature& a, const GeometrySignature& b) {
  double worst = 0.0;
  for (const auto& p : a.samples) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b.samples) best = std::min(best, (p - q).squaredNorm());
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

// Kernel-free coincidence test: class, canonical params, measure and a
// two-sided sample distance all agree within delta.
inline bool geometry_coincident(const GeometrySignature& a, const GeometrySignature& b, double delta) {
  if (!same_underlying_geometry(a, b, delta)) return false;
  if (std::abs(a.measure - b.measure) > delta * std::max({1.0, a.measure, b.measure})) return false;
  if (a.samples.empty() || b.samples.empty()) return a.samples.size() == b.samples.size();
  const double tol =
      2.0 * delta * std::max({1.0, a.sample_spacing_factor(), b.sample_spacing_factor()});
  return directed_sample_distance(a, b) <= tol && directed_sample_distance(b, a) <= tol;
}

inline void check_shared_frame(const BRepGraph& bo, const BRepGraph& bu) {
  const double a = bo.diagonal(), b = bu.diagonal();
  if (!(a > 0.0) || !(b > 0.0) || a > 10.0 * b || b > 10.0 * a)
    throw FrameMismatch("bbox diagonals differ by more than 10x");
}

// Matches unchanged entities. Centroids of the updated model are indexed in a
// shifted grid; each original centroid retrieves its within-delta neighbours,
// which are confirmed with geometry_coincident. Entities involved in any
// ambiguity (several coincident partners on either side) are left unmatched.
inline Matching coincidence_match(const BRepGraph& bo, const BRepGraph& bu, double delta) {
  check_shared_frame(bo, bu);
  Matching m;
  for (Kind kind : kAllKinds) {
    const std::size_t no = bo.count(kind), nu = bu.count(kind);
    std::vector<std::pair<PointIndex3::Id, PointIndex3::Point>> pts;
    pts.reserve(nu);
    for (std::size_t j = 0; j < nu; ++j)
      pts.emplace_back(static_cast<PointIndex3::Id>(j), to_point(bu.geom({kind, j}).centroid));
    const auto index = PointIndex3::build(std::move(pts), delta);

    std::vector<std::vector<std::size_t>> fwd(no);
    std::vector<int> claims(nu, 0);
    for (std::size_t i = 0; i < no; ++i) {
      const auto& gi = bo.geom({kind, i});
      for (auto id : index.query(to_point(gi.centroid))) {
        const auto j = static_cast<std::size_t>(id);
        if (geometry_coincident(gi, bu.geom({kind, j}), delta)) {
          fwd[i].push_back(j);
          ++claims[j];
        }
      }
    }
    for (std::size_t i = 0; i < no; ++i)
      if (fwd[i].size() == 1 && claims[fwd[i][0]] == 1) m.add({kind, i}, {kind, fwd[i][0]}, Provenance::Exact);
  }
  return m;
}

}  // namespace brepmatch
