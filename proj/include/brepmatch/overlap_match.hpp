#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "brepmatch/exact_match.hpp"
#include "brepmatch/grid_index.hpp"

namespace brepmatch {

// A sample of one entity counts as lying on another when its nearest sample
// there is within kappa times that entity's nominal sample spacing. Curve
// samples sit at segment midpoints, so half a spacing covers the curve
// exactly; surface samples are leaf medoids, at most about 0.8 spacings from
// any point of their leaf.
inline constexpr double kSurfaceOverlapKappa = 1.0;
inline constexpr double kCurveOverlapKappa = 0.5 + 1e-6;

// Spacing from the nominal sample count, so that deleting samples never
// widens the tolerance.
inline double nominal_spacing(const GeometrySignature& g) {
  if (is_surface(g.kind)) return std::sqrt(g.measure / static_cast<double>(kFaceSamples));
  return g.measure / static_cast<double>(kEdgeSamples);
}

namespace overlap_detail {

// Total weight of a.samples lying on b.
inline double covered_weight(const GeometrySignature& a, const GeometrySignature& b) {
  if (b.samples.empty()) return 0.0;
  const double kappa = is_surface(b.kind) ? kSurfaceOverlapKappa : kCurveOverlapKappa;
  const double tol = kappa * nominal_spacing(b);
  const double tol2 = tol * tol;
  double covered = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b.samples) best = std::min(best, (a.samples[i] - q).squaredNorm());
    if (best <= tol2) covered += a.weights[i];
  }
  return covered;
}

}  // namespace overlap_detail

// Overlap as a fraction of the larger entity: the sampled measure of each
// entity lying on the other, divided by the larger measure, minimized over
// the two directions. For nested regions the smaller entity is fully covered
// and the result is the exact measure ratio. Returns 1 for a == b and 0 for
// disjoint entities; removing samples never increases it.
inline double estimate_overlap(const GeometrySignature& a, const GeometrySignature& b) {
  const double larger = std::max(a.measure, b.measure);
  if (!(larger > 0.0)) return 0.0;
  const double ab = overlap_detail::covered_weight(a, b);
  const double ba = overlap_detail::covered_weight(b, a);
  return std::clamp(std::min(ab, ba) / larger, 0.0, 1.0);
}

inline ShiftedGridIndex<kParamCount>::Point params_point(const Params& p) {
  ShiftedGridIndex<kParamCount>::Point out;
  std::copy(p.begin(), p.end(), out.begin());
  return out;
}

// Extends `base` with pairs of unmatched faces/edges that lie on the same
// underlying surface/curve and overlap by at least `frac_threshold`.
// Candidates come from a 16-dimensional shifted grid over params; a pair is
// kept only when each side is the other's unique best.
inline Matching overlap_match(const BRepGraph& bo, const BRepGraph& bu, const Matching& base,
                              double frac_threshold, double delta) {
  if (!(frac_threshold > 0.0 && frac_threshold <= 1.0))
    throw ValidationError("overlap threshold must lie in (0,1]");
  Matching m = base;
  std::vector<MatchPair> added;
  for (Kind kind : {Kind::Face, Kind::Edge}) {
    const std::size_t no = bo.count(kind), nu = bu.count(kind);
    using Index = ShiftedGridIndex<kParamCount>;
    std::vector<std::pair<Index::Id, Index::Point>> pts;
    for (std::size_t j = 0; j < nu; ++j) {
      if (m.has_upd({kind, j})) continue;
      const auto& g = bu.geom({kind, j});
      pts.emplace_back(static_cast<Index::Id>(2 * j), params_point(g.params));
      if (param_layout(g.kind).sign_symmetric)
        pts.emplace_back(static_cast<Index::Id>(2 * j + 1), params_point(flipped_params(g)));
    }
    const auto index = Index::build(std::move(pts), delta);

    struct Cand {
      std::size_t i, j;
      double overlap;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < no; ++i) {
      if (m.has_orig({kind, i})) continue;
      const auto& gi = bo.geom({kind, i});
      std::vector<std::size_t> js;
      for (auto id : index.query(params_point(gi.params))) js.push_back(static_cast<std::size_t>(id / 2));
      js.erase(std::unique(js.begin(), js.end()), js.end());
      for (std::size_t j : js) {
        const auto& gj = bu.geom({kind, j});
        if (!same_underlying_geometry(gi, gj, delta)) continue;
        const double ov = estimate_overlap(gi, gj);
        if (ov >= frac_threshold) cands.push_back({i, j, ov});
      }
    }
    // unique best per side
    auto unique_best = [&](auto key_of, std::size_t key) {
      const Cand* best = nullptr;
      bool tie = false;
      for (const auto& c : cands) {
        if (key_of(c) != key) continue;
        if (!best || c.overlap > best->overlap) {
          best = &c;
          tie = false;
        } else if (c.overlap == best->overlap) {
          tie = true;
        }
      }
      return tie ? nullptr : best;
    };
    for (const auto& c : cands) {
      const Cand* bi = unique_best([](const Cand& x) { return x.i; }, c.i);
      const Cand* bj = unique_best([](const Cand& x) { return x.j; }, c.j);
      if (bi == &c && bj == &c) added.push_back({{kind, c.i}, {kind, c.j}, Provenance::Overlap, 1.0, 0});
    }
  }
  std::sort(added.begin(), added.end(), [](const MatchPair& a, const MatchPair& b) { return a.orig < b.orig; });
  for (const auto& p : added) m.add(p.orig, p.upd, Provenance::Overlap);
  return m;
}

}  // namespace brepmatch
