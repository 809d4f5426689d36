#pragma once

#include <Eigen/Core>

#include <cmath>

#include "brepmatch/brep.hpp"

namespace brepmatch {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Normalization frame shared by both versions of a model: the center and
// diagonal of the original's bbox.
struct Frame {
  Vec3 center = Vec3::Zero();
  double diagonal = 1.0;
};

inline Frame frame_of(const BRepGraph& original) { return {original.center(), original.diagonal()}; }

// Column layout of the 41-wide entity feature vector.
namespace feat {
inline constexpr int kKind = 0;       // 3: face, edge, vertex one-hot
inline constexpr int kClass = 3;      // 10: geometry class one-hot
inline constexpr int kParams = 13;    // 16: frame-normalized params
inline constexpr int kCentroid = 29;  // 3
inline constexpr int kBBox = 32;      // 6: min, max
inline constexpr int kMeasure = 38;   // 1: log1p(normalized measure)
inline constexpr int kLoopCtx = 39;   // 2: on inner loop, on outer loop
inline constexpr int kWidth = 41;
inline constexpr int kLoopWidth = 3;  // outer, inner, log(edge count)
}  // namespace feat

struct FeatureTable {
  Matrix faces;     // F x 41
  Matrix edges;     // E x 41
  Matrix vertices;  // V x 41
  Matrix loops;     // L x 3

  const Matrix& of(Kind k) const {
    switch (k) {
      case Kind::Face: return faces;
      case Kind::Edge: return edges;
      case Kind::Vertex: return vertices;
    }
    return faces;
  }
};

// Params re-expressed relative to the frame: positions relative to the frame
// center (sliding positions re-footed at the center), lengths divided by the
// diagonal, directions and dimensionless slots unchanged.
inline Params normalize_params(const GeometrySignature& g, const Frame& frame) {
  Params out = g.params;
  if (g.kind == GeomKind::Freeform) return out;
  const auto layout = param_layout(g.kind);
  const double inv = 1.0 / frame.diagonal;
  if (layout.position >= 0) {
    Vec3 p = param_vec(g.params, layout.position);
    Vec3 rel = p - frame.center;
    if (layout.position_slides && layout.directions[0] >= 0) {
      const Vec3 dir = param_vec(g.params, layout.directions[0]);
      if (g.kind == GeomKind::Plane) {
        rel = dir.dot(rel) * dir;
      } else {
        rel = rel - dir.dot(rel) * dir;
      }
    }
    set_param_vec(out, layout.position, rel * inv);
  }
  for (int slot : layout.lengths)
    if (slot >= 0) out[slot] = g.params[slot] * inv;
  return out;
}

namespace features_detail {

inline void fill_common(Eigen::Ref<Eigen::RowVectorXd> row, Kind kind, const GeometrySignature& g,
                        const Frame& frame) {
  row.setZero();
  row[feat::kKind + static_cast<int>(kind)] = 1.0;
  if (g.kind != GeomKind::Freeform) row[feat::kClass + static_cast<int>(g.kind)] = 1.0;
  const Params p = normalize_params(g, frame);
  for (std::size_t i = 0; i < kParamCount; ++i) row[feat::kParams + static_cast<int>(i)] = p[i];
  const double inv = 1.0 / frame.diagonal;
  const Vec3 c = (g.centroid - frame.center) * inv;
  const Vec3 lo = (g.bbox_min - frame.center) * inv;
  const Vec3 hi = (g.bbox_max - frame.center) * inv;
  for (int k = 0; k < 3; ++k) {
    row[feat::kCentroid + k] = c[k];
    row[feat::kBBox + k] = lo[k];
    row[feat::kBBox + 3 + k] = hi[k];
  }
  double m = 0.0;
  if (kind == Kind::Face) m = g.measure * inv * inv;
  if (kind == Kind::Edge) m = g.measure * inv;
  row[feat::kMeasure] = std::log1p(m);
}

}  // namespace features_detail

// Per-entity numeric features. Pure and deterministic.
inline FeatureTable extract_features(const BRepGraph& b, const Frame& frame) {
  if (!(frame.diagonal > 0.0) || !std::isfinite(frame.diagonal))
    throw DegenerateFrame("frame diagonal must be positive");
  FeatureTable t;
  t.faces.setZero(static_cast<Eigen::Index>(b.faces.size()), feat::kWidth);
  t.edges.setZero(static_cast<Eigen::Index>(b.edges.size()), feat::kWidth);
  t.vertices.setZero(static_cast<Eigen::Index>(b.vertices.size()), feat::kWidth);
  t.loops.setZero(static_cast<Eigen::Index>(b.loops.size()), feat::kLoopWidth);

  std::vector<std::array<bool, 2>> edge_ctx(b.edges.size(), {false, false});
  for (std::size_t l = 0; l < b.loops.size(); ++l) {
    const auto& loop = b.loops[l];
    for (const auto& use : loop.edges) edge_ctx[use.edge][loop.outer ? 1 : 0] = true;
    t.loops(static_cast<Eigen::Index>(l), loop.outer ? 0 : 1) = 1.0;
    t.loops(static_cast<Eigen::Index>(l), 2) = std::log(static_cast<double>(std::max<std::size_t>(1, loop.edges.size())));
  }

  for (std::size_t i = 0; i < b.faces.size(); ++i)
    features_detail::fill_common(t.faces.row(static_cast<Eigen::Index>(i)), Kind::Face, b.faces[i].geom, frame);
  for (std::size_t i = 0; i < b.edges.size(); ++i) {
    auto row = t.edges.row(static_cast<Eigen::Index>(i));
    features_detail::fill_common(row, Kind::Edge, b.edges[i].geom, frame);
    row[feat::kLoopCtx] = edge_ctx[i][0] ? 1.0 : 0.0;
    row[feat::kLoopCtx + 1] = edge_ctx[i][1] ? 1.0 : 0.0;
  }
  for (std::size_t i = 0; i < b.vertices.size(); ++i) {
    auto row = t.vertices.row(static_cast<Eigen::Index>(i));
    features_detail::fill_common(row, Kind::Vertex, b.vertex_geom[i], frame);
    bool inner = false, outer = false;
    for (std::size_t e : b.vertex_edges[i]) {
      inner |= edge_ctx[e][0];
      outer |= edge_ctx[e][1];
    }
    row[feat::kLoopCtx] = inner ? 1.0 : 0.0;
    row[feat::kLoopCtx + 1] = outer ? 1.0 : 0.0;
  }
  return t;
}

}  // namespace brepmatch
