#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "brepmatch/errors.hpp"

namespace brepmatch {

using Vec3 = Eigen::Vector3d;

// Primary entity kinds. The enumeration order (Face < Edge < Vertex) is the
// tie-break order used throughout the matchers.
enum class Kind : std::uint8_t { Face = 0, Edge = 1, Vertex = 2 };

inline constexpr std::array<Kind, 3> kAllKinds{Kind::Face, Kind::Edge, Kind::Vertex};

inline std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Face: return "face";
    case Kind::Edge: return "edge";
    case Kind::Vertex: return "vertex";
  }
  return "?";
}

inline Kind kind_from_name(std::string_view s) {
  if (s == "face") return Kind::Face;
  if (s == "edge") return Kind::Edge;
  if (s == "vertex") return Kind::Vertex;
  throw SchemaError("unknown entity kind '" + std::string(s) + "'");
}

struct EntityRef {
  Kind kind = Kind::Face;
  std::size_t index = 0;

  auto operator<=>(const EntityRef&) const = default;
  bool operator==(const EntityRef&) const = default;
};

// Geometry classes. The first ten share the one-hot slot table of the
// feature encoder; Freeform has no slot and all-zero params.
enum class GeomKind : std::uint8_t {
  Plane, Cylinder, Cone, Sphere, Torus,
  Line, Circle, Arc, Ellipse,
  Point,
  Freeform
};

inline constexpr std::size_t kGeomSlots = 10;
inline constexpr std::size_t kParamCount = 16;
inline constexpr std::size_t kFaceSamples = 64;
inline constexpr std::size_t kEdgeSamples = 16;

using Params = std::array<double, kParamCount>;

inline std::string_view geom_kind_name(GeomKind g) {
  switch (g) {
    case GeomKind::Plane: return "plane";
    case GeomKind::Cylinder: return "cylinder";
    case GeomKind::Cone: return "cone";
    case GeomKind::Sphere: return "sphere";
    case GeomKind::Torus: return "torus";
    case GeomKind::Line: return "line";
    case GeomKind::Circle: return "circle";
    case GeomKind::Arc: return "arc";
    case GeomKind::Ellipse: return "ellipse";
    case GeomKind::Point: return "point";
    case GeomKind::Freeform: return "freeform";
  }
  return "?";
}

inline GeomKind geom_kind_from_name(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(GeomKind::Freeform); ++i) {
    auto g = static_cast<GeomKind>(i);
    if (geom_kind_name(g) == s) return g;
  }
  throw SchemaError("unknown geometry kind '" + std::string(s) + "'");
}

inline bool is_surface(GeomKind g) {
  return g <= GeomKind::Torus || g == GeomKind::Freeform;
}
inline bool is_curve(GeomKind g) {
  return (g >= GeomKind::Line && g <= GeomKind::Ellipse) || g == GeomKind::Freeform;
}

// Canonical parameter layout per class (unused slots are zero):
//   plane    : foot point(0..2) unit normal(3..5)
//   cylinder : axis foot point(0..2) unit axis(3..5) radius(6) sense(7, +1 convex / -1 concave)
//   cone     : apex(0..2) unit axis(3..5) half angle(6)
//   sphere   : center(0..2) radius(3)
//   torus    : center(0..2) unit axis(3..5) major(6) minor(7)
//   line     : foot point(0..2) unit direction(3..5)
//   circle   : center(0..2) unit axis(3..5) radius(6)
//   arc      : center(0..2) unit axis(3..5) radius(6) unit start dir(7..9) sweep(10)
//   ellipse  : center(0..2) unit axis(3..5) unit major dir(6..8) major(9) minor(10)
//   point    : position(0..2)
// "Foot point" is the point of the plane/axis/line closest to the world origin.
struct ParamLayout {
  int position = -1;            // slot of a 3D point, or -1
  bool position_slides = false; // point may slide along a line / within a plane
  std::array<int, 2> directions{-1, -1};  // slots of unit 3-vectors
  bool sign_symmetric = false;  // first direction is meaningful only up to sign
  std::array<int, 3> lengths{-1, -1, -1};  // slots holding lengths (scaled by the frame)
};

inline ParamLayout param_layout(GeomKind g) {
  ParamLayout l;
  switch (g) {
    case GeomKind::Plane:
      l.position = 0; l.position_slides = true; l.directions = {3, -1}; l.sign_symmetric = true;
      break;
    case GeomKind::Cylinder:
      l.position = 0; l.position_slides = true; l.directions = {3, -1}; l.sign_symmetric = true;
      l.lengths = {6, -1, -1};
      break;
    case GeomKind::Cone:
      l.position = 0; l.directions = {3, -1}; l.sign_symmetric = true;
      break;
    case GeomKind::Sphere:
      l.position = 0; l.lengths = {3, -1, -1};
      break;
    case GeomKind::Torus:
      l.position = 0; l.directions = {3, -1}; l.sign_symmetric = true; l.lengths = {6, 7, -1};
      break;
    case GeomKind::Line:
      l.position = 0; l.position_slides = true; l.directions = {3, -1}; l.sign_symmetric = true;
      break;
    case GeomKind::Circle:
      l.position = 0; l.directions = {3, -1}; l.sign_symmetric = true; l.lengths = {6, -1, -1};
      break;
    case GeomKind::Arc:
      l.position = 0; l.directions = {3, 7}; l.lengths = {6, -1, -1};
      break;
    case GeomKind::Ellipse:
      l.position = 0; l.directions = {3, 6}; l.sign_symmetric = true; l.lengths = {9, 10, -1};
      break;
    case GeomKind::Point:
      l.position = 0;
      break;
    case GeomKind::Freeform:
      break;
  }
  return l;
}

inline Vec3 param_vec(const Params& p, int slot) { return {p[slot], p[slot + 1], p[slot + 2]}; }
inline void set_param_vec(Params& p, int slot, const Vec3& v) {
  p[slot] = v.x(); p[slot + 1] = v.y(); p[slot + 2] = v.z();
}

// Per-entity geometry: class, canonical params, weighted samples and the
// statistics derived from them (see finalize()).
struct GeometrySignature {
  GeomKind kind = GeomKind::Point;
  Params params{};
  std::vector<Vec3> samples;
  std::vector<double> weights;  // empty for vertices
  // derived
  Vec3 centroid = Vec3::Zero();
  double measure = 0.0;
  Vec3 bbox_min = Vec3::Zero();
  Vec3 bbox_max = Vec3::Zero();

  void finalize() {
    measure = 0.0;
    centroid.setZero();
    if (samples.empty()) return;
    bbox_min = bbox_max = samples.front();
    for (const auto& s : samples) {
      bbox_min = bbox_min.cwiseMin(s);
      bbox_max = bbox_max.cwiseMax(s);
    }
    if (weights.empty()) {
      for (const auto& s : samples) centroid += s;
      centroid /= static_cast<double>(samples.size());
      return;
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      measure += weights[i];
      centroid += weights[i] * samples[i];
    }
    if (measure > 0.0) centroid /= measure;
  }

  double bbox_diagonal() const { return (bbox_max - bbox_min).norm(); }

  // local bbox diagonal / sqrt(sample count)
  double sample_spacing_factor() const {
    return samples.empty() ? 0.0 : bbox_diagonal() / std::sqrt(static_cast<double>(samples.size()));
  }

  // Mean spacing of the samples over the entity itself: sqrt(area / n) for
  // surfaces, length / n for curves, 0 for points.
  double intrinsic_spacing() const {
    if (samples.empty() || weights.empty()) return 0.0;
    const double n = static_cast<double>(samples.size());
    return is_surface(kind) ? std::sqrt(measure / n) : measure / n;
  }
};

struct Vertex {
  Vec3 pos = Vec3::Zero();
};

struct Edge {
  GeometrySignature geom;
  std::optional<std::array<std::size_t, 2>> vertices;  // nullopt for closed edges
};

struct LoopUse {
  std::size_t edge = 0;
  bool reversed = false;
  bool operator==(const LoopUse&) const = default;
};

struct Loop {
  bool outer = false;
  std::vector<LoopUse> edges;
};

struct Face {
  GeometrySignature geom;
  std::vector<std::size_t> loops;
};

// Topological graph of a solid. Adjacency that is not stored explicitly is
// derived by finalize(); after that the graph is treated as immutable.
struct BRepGraph {
  std::string model_id;
  Vec3 bbox_min = Vec3::Zero();
  Vec3 bbox_max = Vec3::Zero();
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  std::vector<Loop> loops;
  std::vector<Face> faces;

  // derived adjacency
  std::vector<GeometrySignature> vertex_geom;         // point signatures
  std::vector<std::vector<std::size_t>> vertex_edges;  // sorted
  std::vector<std::vector<std::size_t>> edge_loops;    // sorted
  std::vector<std::vector<std::size_t>> edge_faces;    // sorted, unique
  std::vector<std::size_t> loop_face;
  std::vector<std::vector<std::size_t>> face_faces;    // faces sharing an edge, sorted

  std::size_t count(Kind k) const {
    switch (k) {
      case Kind::Face: return faces.size();
      case Kind::Edge: return edges.size();
      case Kind::Vertex: return vertices.size();
    }
    return 0;
  }

  const GeometrySignature& geom(EntityRef r) const {
    switch (r.kind) {
      case Kind::Face: return faces.at(r.index).geom;
      case Kind::Edge: return edges.at(r.index).geom;
      case Kind::Vertex: return vertex_geom.at(r.index);
    }
    return vertex_geom.at(r.index);
  }

  double diagonal() const { return (bbox_max - bbox_min).norm(); }
  Vec3 center() const { return 0.5 * (bbox_min + bbox_max); }

  // Recomputes derived geometry statistics and adjacency. Tolerates dangling
  // indices (they are skipped) so validate() can report them.
  void finalize() {
    for (auto& e : edges) e.geom.finalize();
    for (auto& f : faces) f.geom.finalize();
    vertex_geom.assign(vertices.size(), {});
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      auto& g = vertex_geom[i];
      g.kind = GeomKind::Point;
      g.params.fill(0.0);
      set_param_vec(g.params, 0, vertices[i].pos);
      g.samples = {vertices[i].pos};
      g.weights.clear();
      g.finalize();
    }
    vertex_edges.assign(vertices.size(), {});
    edge_loops.assign(edges.size(), {});
    edge_faces.assign(edges.size(), {});
    loop_face.assign(loops.size(), SIZE_MAX);
    face_faces.assign(faces.size(), {});
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (!edges[e].vertices) continue;
      for (std::size_t v : *edges[e].vertices)
        if (v < vertices.size()) vertex_edges[v].push_back(e);
    }
    for (std::size_t l = 0; l < loops.size(); ++l)
      for (const auto& use : loops[l].edges)
        if (use.edge < edges.size()) edge_loops[use.edge].push_back(l);
    for (std::size_t f = 0; f < faces.size(); ++f)
      for (std::size_t l : faces[f].loops)
        if (l < loops.size() && loop_face[l] == SIZE_MAX) loop_face[l] = f;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      for (std::size_t l : edge_loops[e])
        if (loop_face[l] != SIZE_MAX) edge_faces[e].push_back(loop_face[l]);
    }
    auto sort_unique = [](std::vector<std::size_t>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    for (auto& v : vertex_edges) sort_unique(v);
    for (auto& v : edge_loops) sort_unique(v);
    for (auto& v : edge_faces) sort_unique(v);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto& fs = edge_faces[e];
      for (std::size_t a : fs)
        for (std::size_t b : fs)
          if (a != b) face_faces[a].push_back(b);
    }
    for (auto& v : face_faces) sort_unique(v);
  }
};

// Exact equality of every stored (non-derived) field.
inline bool structurally_equal(const BRepGraph& a, const BRepGraph& b) {
  auto geom_eq = [](const GeometrySignature& x, const GeometrySignature& y) {
    return x.kind == y.kind && x.params == y.params && x.samples == y.samples &&
           x.weights == y.weights;
  };
  if (a.model_id != b.model_id || a.bbox_min != b.bbox_min || a.bbox_max != b.bbox_max) return false;
  if (a.vertices.size() != b.vertices.size() || a.edges.size() != b.edges.size() ||
      a.loops.size() != b.loops.size() || a.faces.size() != b.faces.size())
    return false;
  for (std::size_t i = 0; i < a.vertices.size(); ++i)
    if (a.vertices[i].pos != b.vertices[i].pos) return false;
  for (std::size_t i = 0; i < a.edges.size(); ++i)
    if (!geom_eq(a.edges[i].geom, b.edges[i].geom) || a.edges[i].vertices != b.edges[i].vertices)
      return false;
  for (std::size_t i = 0; i < a.loops.size(); ++i)
    if (a.loops[i].outer != b.loops[i].outer || a.loops[i].edges != b.loops[i].edges) return false;
  for (std::size_t i = 0; i < a.faces.size(); ++i)
    if (!geom_eq(a.faces[i].geom, b.faces[i].geom) || a.faces[i].loops != b.faces[i].loops)
      return false;
  return true;
}

}  // namespace brepmatch
