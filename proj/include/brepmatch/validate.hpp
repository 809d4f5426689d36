#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "brepmatch/brep.hpp"

namespace brepmatch {

namespace detail {

inline bool kind_allowed_for(Kind k, GeomKind g) {
  switch (k) {
    case Kind::Face: return is_surface(g);
    case Kind::Edge: return is_curve(g);
    case Kind::Vertex: return g == GeomKind::Point;
  }
  return false;
}

inline void check_geometry(const GeometrySignature& g, Kind kind, std::size_t expected_samples,
                           const std::string& path, std::vector<std::string>& out) {
  if (!kind_allowed_for(kind, g.kind))
    out.push_back(path + ": geometry class '" + std::string(geom_kind_name(g.kind)) +
                  "' not allowed for " + std::string(kind_name(kind)));
  for (double p : g.params)
    if (!std::isfinite(p)) {
      out.push_back(path + ": non-finite param");
      break;
    }
  const auto layout = param_layout(g.kind);
  for (int slot : layout.directions) {
    if (slot < 0) continue;
    const double n = param_vec(g.params, slot).norm();
    if (std::abs(n - 1.0) > 1e-9)
      out.push_back(path + ": direction at param slot " + std::to_string(slot) + " is not unit length");
  }
  if (g.samples.size() != expected_samples)
    out.push_back(path + ": expected " + std::to_string(expected_samples) + " samples, got " +
                  std::to_string(g.samples.size()));
  if (g.weights.size() != g.samples.size())
    out.push_back(path + ": weight count does not match sample count");
  for (const auto& s : g.samples)
    if (!s.allFinite()) {
      out.push_back(path + ": non-finite sample");
      break;
    }
  for (double w : g.weights)
    if (!(w > 0.0) || !std::isfinite(w)) {
      out.push_back(path + ": sample weights must be positive");
      break;
    }
}

inline bool inside_bbox(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
}

}  // namespace detail

// Returns one human-readable description per violated invariant, each
// prefixed with the path of the offending entity. Empty iff the graph is valid.
inline std::vector<std::string> validate(const BRepGraph& b) {
  std::vector<std::string> out;
  const std::size_t nv = b.vertices.size(), ne = b.edges.size(), nl = b.loops.size(),
                    nf = b.faces.size();

  for (std::size_t i = 0; i < nv; ++i) {
    const std::string path = "vertices[" + std::to_string(i) + "]";
    if (!b.vertices[i].pos.allFinite()) out.push_back(path + ": non-finite position");
    if (!detail::inside_bbox(b.vertices[i].pos, b.bbox_min, b.bbox_max))
      out.push_back(path + ": outside model bbox");
  }

  for (std::size_t i = 0; i < ne; ++i) {
    const std::string path = "edges[" + std::to_string(i) + "]";
    const auto& e = b.edges[i];
    detail::check_geometry(e.geom, Kind::Edge, kEdgeSamples, path, out);
    if (e.vertices) {
      for (std::size_t v : *e.vertices)
        if (v >= nv) out.push_back(path + ": dangling vertex index " + std::to_string(v));
      if ((*e.vertices)[0] == (*e.vertices)[1])
        out.push_back(path + ": both endpoints are the same vertex");
    }
    for (const auto& s : e.geom.samples)
      if (!detail::inside_bbox(s, b.bbox_min, b.bbox_max)) {
        out.push_back(path + ": sample outside model bbox");
        break;
      }
  }

  std::vector<int> loop_refs(nl, 0);
  for (std::size_t i = 0; i < nf; ++i) {
    const std::string path = "faces[" + std::to_string(i) + "]";
    const auto& f = b.faces[i];
    detail::check_geometry(f.geom, Kind::Face, kFaceSamples, path, out);
    if (f.loops.empty()) out.push_back(path + ": face has no loops");
    int outer = 0;
    for (std::size_t l : f.loops) {
      if (l >= nl) {
        out.push_back(path + ": dangling loop index " + std::to_string(l));
        continue;
      }
      ++loop_refs[l];
      if (b.loops[l].outer) ++outer;
    }
    if (!f.loops.empty() && outer == 0) out.push_back(path + ": no outer loop");
    if (outer > 1) out.push_back(path + ": more than one outer loop");
    for (const auto& s : f.geom.samples)
      if (!detail::inside_bbox(s, b.bbox_min, b.bbox_max)) {
        out.push_back(path + ": sample outside model bbox");
        break;
      }
  }

  for (std::size_t i = 0; i < nl; ++i) {
    const std::string path = "loops[" + std::to_string(i) + "]";
    const auto& loop = b.loops[i];
    if (loop_refs[i] != 1)
      out.push_back(path + ": referenced by " + std::to_string(loop_refs[i]) + " faces (expected 1)");
    if (loop.edges.empty()) {
      out.push_back(path + ": empty loop");
      continue;
    }
    bool dangling = false;
    for (const auto& use : loop.edges)
      if (use.edge >= ne) {
        out.push_back(path + ": dangling edge index " + std::to_string(use.edge));
        dangling = true;
      }
    if (dangling) continue;

    bool has_closed = false;
    for (const auto& use : loop.edges) has_closed |= !b.edges[use.edge].vertices.has_value();
    if (has_closed) {
      if (loop.edges.size() != 1)
        out.push_back(path + ": closed edge must be the only edge of its loop (non-closed loop)");
      continue;
    }
    auto start = [&](const LoopUse& u) {
      const auto& vs = *b.edges[u.edge].vertices;
      return u.reversed ? vs[1] : vs[0];
    };
    auto end = [&](const LoopUse& u) {
      const auto& vs = *b.edges[u.edge].vertices;
      return u.reversed ? vs[0] : vs[1];
    };
    const std::size_t n = loop.edges.size();
    for (std::size_t k = 0; k < n; ++k) {
      const auto& cur = loop.edges[k];
      const auto& next = loop.edges[(k + 1) % n];
      if (end(cur) != start(next)) {
        out.push_back(path + ": non-closed loop (edge " + std::to_string(cur.edge) +
                      " does not connect to edge " + std::to_string(next.edge) + ")");
        break;
      }
    }
  }
  return out;
}

}  // namespace brepmatch
