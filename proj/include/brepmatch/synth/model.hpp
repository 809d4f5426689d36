#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "brepmatch/brep.hpp"
#include "brepmatch/errors.hpp"
#include "brepmatch/synth/polyhedron.hpp"

namespace brepmatch::synth {

// Feature tree of a synthetic part: an axis-aligned block, optional bosses
// and holes on its faces, and planar bevels on block or boss edges.
//
// Box faces are numbered 0..5: axis = f / 2, outward sign = (f % 2) ? + : -.
// In-plane coordinates of a feature on box face f are absolute world
// coordinates along the two other axes.

struct Block {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
};

struct RectBoss {
  int id = 0;
  int host = 5;
  Vec3 lo = Vec3::Zero();  // only the two in-plane axes are used
  Vec3 hi = Vec3::Zero();
  double height = 0.0;
};

struct CylBoss {
  int id = 0;
  int host = 5;
  double cu = 0.0, cv = 0.0;
  double radius = 0.0;
  double height = 0.0;
};

struct Hole {
  int id = 0;
  int host = 5;
  double cu = 0.0, cv = 0.0;
  double radius = 0.0;
  double depth = 0.0;  // ignored for through holes
  bool through = false;
};

enum class BevelStyle { Chamfer, FilletLike };

struct Bevel {
  int id = 0;
  int box = 0;  // 0 = block, otherwise a RectBoss id
  int fa = 0, fb = 2;  // the two box faces meeting at the bevelled edge
  double size = 0.0;
  BevelStyle style = BevelStyle::Chamfer;
};

struct ModelSpec {
  Block block;
  std::vector<RectBoss> rect_bosses;
  std::vector<CylBoss> cyl_bosses;
  std::vector<Hole> holes;
  std::vector<Bevel> bevels;
  int next_id = 1;

  const RectBoss* rect_boss(int id) const {
    for (const auto& b : rect_bosses)
      if (b.id == id) return &b;
    return nullptr;
  }
};

inline int face_axis(int f) { return f / 2; }
inline double face_sign(int f) { return (f % 2) ? 1.0 : -1.0; }
inline int u_axis(int f) { return (face_axis(f) + 1) % 3; }
inline int v_axis(int f) { return (face_axis(f) + 2) % 3; }
inline Vec3 face_normal(int f) { return face_sign(f) * Vec3::Unit(face_axis(f)); }

inline std::string axis_tag(int f) {
  static constexpr std::array<char, 3> kAxis{'x', 'y', 'z'};
  return std::string(1, kAxis[face_axis(f)]) + ((f % 2) ? '+' : '-');
}

inline std::string root_face_name(int f) { return "R" + axis_tag(f); }

inline double root_offset(const Block& b, int f) { return (f % 2) ? b.hi[face_axis(f)] : b.lo[face_axis(f)]; }

// World point of in-plane coordinates (cu, cv) on block face f.
inline Vec3 host_point(const Block& b, int f, double cu, double cv) {
  Vec3 p;
  p[face_axis(f)] = root_offset(b, f);
  p[u_axis(f)] = cu;
  p[v_axis(f)] = cv;
  return p;
}

inline HalfSpace box_plane(const Vec3& lo, const Vec3& hi, int f, std::string name) {
  const double s = face_sign(f);
  return {std::move(name), face_normal(f), s > 0 ? hi[face_axis(f)] : -lo[face_axis(f)]};
}

inline std::pair<Vec3, Vec3> rect_boss_box(const Block& b, const RectBoss& r) {
  Vec3 lo = r.lo, hi = r.hi;
  const int k = face_axis(r.host);
  const double off = root_offset(b, r.host);
  if (r.host % 2) {
    lo[k] = off;
    hi[k] = off + r.height;
  } else {
    lo[k] = off - r.height;
    hi[k] = off;
  }
  return {lo, hi};
}

inline std::string rect_boss_face_name(const RectBoss& r, int g) {
  if (face_axis(g) == face_axis(r.host)) {
    if (g == r.host) return "B" + std::to_string(r.id) + "top";
    return root_face_name(r.host);  // the bottom sits on the host plane
  }
  return "B" + std::to_string(r.id) + axis_tag(g);
}

inline std::vector<HalfSpace> bevel_planes(const Bevel& bv, const HalfSpace& a, const HalfSpace& b) {
  const std::string base = "K" + std::to_string(bv.id);
  if (bv.style == BevelStyle::Chamfer) {
    return {{base, (a.n + b.n) / std::numbers::sqrt2, (a.d + b.d - bv.size) / std::numbers::sqrt2}};
  }
  std::vector<HalfSpace> out;
  const double r = bv.size;
  for (auto [deg, tag] : {std::pair{22.5, "a"}, std::pair{67.5, "b"}}) {
    const double t = deg * std::numbers::pi / 180.0;
    out.push_back({base + tag, std::cos(t) * a.n + std::sin(t) * b.n,
                   std::cos(t) * (a.d - r) + std::sin(t) * (b.d - r) + r});
  }
  return out;
}

// Box faces share a corner iff all axis choices agree.
inline bool box_edges_share_corner(int fa, int fb, int ga, int gb) {
  for (int corner = 0; corner < 8; ++corner) {
    auto on = [corner](int f) { return ((corner >> face_axis(f)) & 1) == (f % 2); };
    if (on(fa) && on(fb) && on(ga) && on(gb)) return true;
  }
  return false;
}

inline bool valid_box_edge(int fa, int fb) { return fa >= 0 && fa < 6 && fb >= 0 && fb < 6 && face_axis(fa) != face_axis(fb); }

// A synthetic part: its feature tree, the emitted graph, and the persistent
// name of every face, edge and vertex (aligned with graph indices).
struct SynthModel {
  ModelSpec spec;
  BRepGraph graph;
  std::vector<std::string> face_names, edge_names, vertex_names;

  const std::vector<std::string>& names(Kind k) const {
    switch (k) {
      case Kind::Face: return face_names;
      case Kind::Edge: return edge_names;
      case Kind::Vertex: return vertex_names;
    }
    return face_names;
  }

  std::optional<std::size_t> find(Kind k, const std::string& name) const {
    const auto& v = names(k);
    auto it = std::lower_bound(v.begin(), v.end(), name);
    if (it == v.end() || *it != name) return std::nullopt;
    return static_cast<std::size_t>(it - v.begin());
  }
};

namespace emit_detail {

struct Circle {
  Vec3 center;
  Vec3 axis;
  double radius;
};

struct RawLoop {
  bool outer = false;
  std::vector<std::string> ring;  // vertex names; empty for a circle loop
  std::string circle;
  bool circle_reversed = false;
};

struct RawFace {
  std::string name;
  GeomKind kind = GeomKind::Plane;
  Vec3 n = Vec3::UnitZ();  // plane normal or cylinder axis
  double d = 0.0;          // plane offset
  Vec3 base = Vec3::Zero();  // cylinder: center of the first boundary circle
  double length = 0.0, radius = 0.0, sense = 1.0;  // cylinder
  std::vector<RawLoop> loops;
};

struct Builder {
  double diag = 1.0;
  std::map<std::string, Vec3> vertices;
  std::map<std::string, Circle> circles;
  std::vector<RawFace> faces;

  [[noreturn]] static void reject(const std::string& why) { throw RejectedEdit(why); }

  void add_vertices(const Polyhedron& p) {
    for (const auto& v : p.vertices) vertices.emplace(v.name(), v.pos);
  }

  std::vector<std::string> ring_names(const Polyhedron& p, const PolyFace& f) const {
    std::vector<std::string> out;
    for (std::size_t i : f.ring) out.push_back(p.vertices[i].name());
    return out;
  }
};

struct Footprint {
  Vec3 center;   // circle center, or rectangle center
  double radius = 0.0;  // circle radius; 0 for rectangles
  Vec3 lo, hi;  // 3D AABB of the footprint
  std::vector<Vec3> corners;  // rectangle corners (empty for circles)
};

inline double circle_extent(const Vec3& axis, int i, double r) {
  return r * std::sqrt(std::max(0.0, 1.0 - axis[i] * axis[i]));
}

inline void circle_aabb(const Circle& c, Vec3& lo, Vec3& hi) {
  for (int i = 0; i < 3; ++i) {
    const double e = circle_extent(c.axis, i, c.radius);
    lo[i] = std::min(lo[i], c.center[i] - e);
    hi[i] = std::max(hi[i], c.center[i] + e);
  }
}

inline bool aabb_disjoint(const Vec3& alo, const Vec3& ahi, const Vec3& blo, const Vec3& bhi, double margin) {
  for (int i = 0; i < 3; ++i)
    if (ahi[i] + margin <= blo[i] || bhi[i] + margin <= alo[i]) return true;
  return false;
}

// Signed distance of q from the boundary of a convex planar polygon (positive inside).
inline double polygon_inset(const std::vector<Vec3>& ring, const Vec3& n, const Vec3& q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec3 t = (ring[(i + 1) % ring.size()] - ring[i]).normalized();
    best = std::min(best, n.cross(t).dot(q - ring[i]));
  }
  return best;
}

// --- sampling ---------------------------------------------------------------

struct Region2 {
  std::vector<Eigen::Vector2d> outer_poly;
  double outer_radius = 0.0;
  Eigen::Vector2d outer_center = Eigen::Vector2d::Zero();
  std::vector<std::vector<Eigen::Vector2d>> hole_polys;
  std::vector<std::pair<Eigen::Vector2d, double>> hole_circles;
};

inline bool in_polygon(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      in = !in;
  }
  return in;
}

inline double shoelace(const std::vector<Eigen::Vector2d>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * std::abs(s);
}

inline bool region_contains(const Region2& r, const Eigen::Vector2d& p) {
  if (!r.outer_poly.empty()) {
    if (!in_polygon(r.outer_poly, p)) return false;
  } else if ((p - r.outer_center).squaredNorm() > r.outer_radius * r.outer_radius) {
    return false;
  }
  for (const auto& h : r.hole_polys)
    if (in_polygon(h, p)) return false;
  for (const auto& [c, rad] : r.hole_circles)
    if ((p - c).squaredNorm() < rad * rad) return false;
  return true;
}

inline double region_area(const Region2& r) {
  double a = r.outer_poly.empty() ? std::numbers::pi * r.outer_radius * r.outer_radius : shoelace(r.outer_poly);
  for (const auto& h : r.hole_polys) a -= shoelace(h);
  for (const auto& [c, rad] : r.hole_circles) a -= std::numbers::pi * rad * rad;
  return a;
}

// Fine grid over the region's bounding box, recursively median-split into
// kFaceSamples equal-count leaves; each leaf contributes its mean, or the
// grid point closest to it when the mean falls outside the region.
inline std::vector<Eigen::Vector2d> leaf_medoids(const Region2& r, std::size_t grid = 64) {
  Eigen::Vector2d lo, hi;
  if (!r.outer_poly.empty()) {
    lo = hi = r.outer_poly.front();
    for (const auto& p : r.outer_poly) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  } else {
    lo = r.outer_center.array() - r.outer_radius;
    hi = r.outer_center.array() + r.outer_radius;
  }
  std::vector<Eigen::Vector2d> pts;
  for (std::size_t i = 0; i < grid; ++i)
    for (std::size_t j = 0; j < grid; ++j) {
      const Eigen::Vector2d p(lo.x() + (static_cast<double>(i) + 0.5) / static_cast<double>(grid) * (hi.x() - lo.x()),
                              lo.y() + (static_cast<double>(j) + 0.5) / static_cast<double>(grid) * (hi.y() - lo.y()));
      if (region_contains(r, p)) pts.push_back(p);
    }
  if (pts.size() < kFaceSamples) throw RejectedEdit("face too thin to sample");
  std::vector<Eigen::Vector2d> out;
  auto rec = [&](auto&& self, std::size_t b, std::size_t e, int depth) -> void {
    if (depth == 6) {
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      for (std::size_t i = b; i < e; ++i) mean += pts[i];
      mean /= static_cast<double>(e - b);
      if (region_contains(r, mean)) {
        out.push_back(mean);
        return;
      }
      std::size_t best = b;
      for (std::size_t i = b + 1; i < e; ++i)
        if ((pts[i] - mean).squaredNorm() < (pts[best] - mean).squaredNorm()) best = i;
      out.push_back(pts[best]);
      return;
    }
    Eigen::Vector2d l = pts[b], h = pts[b];
    for (std::size_t i = b; i < e; ++i) {
      l = l.cwiseMin(pts[i]);
      h = h.cwiseMax(pts[i]);
    }
    const int ax = (h.x() - l.x()) >= (h.y() - l.y()) ? 0 : 1;
    std::sort(pts.begin() + static_cast<std::ptrdiff_t>(b), pts.begin() + static_cast<std::ptrdiff_t>(e),
              [ax](const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
                if (p[ax] != q[ax]) return p[ax] < q[ax];
                return p[1 - ax] < q[1 - ax];
              });
    const std::size_t mid = b + (e - b) / 2;
    self(self, b, mid, depth + 1);
    self(self, mid, e, depth + 1);
  };
  rec(rec, 0, pts.size(), 0);
  return out;
}

inline Params plane_params(const Vec3& n, double d) {
  Params p{};
  set_param_vec(p, 0, d * n);
  set_param_vec(p, 3, n);
  return p;
}

inline Vec3 axis_foot(const Vec3& point, const Vec3& dir) { return point - point.dot(dir) * dir; }

inline GeometrySignature line_geometry(const Vec3& a, const Vec3& b) {
  GeometrySignature g;
  g.kind = GeomKind::Line;
  const Vec3 dir = (b - a).normalized();
  set_param_vec(g.params, 0, axis_foot(a, dir));
  set_param_vec(g.params, 3, dir);
  const double len = (b - a).norm();
  for (std::size_t k = 0; k < kEdgeSamples; ++k) {
    const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(kEdgeSamples);
    g.samples.push_back(a + t * (b - a));
    g.weights.push_back(len / static_cast<double>(kEdgeSamples));
  }
  return g;
}

inline GeometrySignature circle_geometry(const Circle& c) {
  GeometrySignature g;
  g.kind = GeomKind::Circle;
  set_param_vec(g.params, 0, c.center);
  set_param_vec(g.params, 3, c.axis);
  g.params[6] = c.radius;
  const auto [u, v] = plane_frame(c.axis);
  const double w = 2.0 * std::numbers::pi * c.radius / static_cast<double>(kEdgeSamples);
  for (std::size_t k = 0; k < kEdgeSamples; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * 2.0 * std::numbers::pi / static_cast<double>(kEdgeSamples);
    g.samples.push_back(c.center + c.radius * (std::cos(t) * u + std::sin(t) * v));
    g.weights.push_back(w);
  }
  return g;
}

}  // namespace emit_detail

// Builds the B-rep graph of a feature tree. Throws RejectedEdit when the
// tree does not describe a valid solid (degenerate or overlapping features,
// features leaving their host face, edges shorter than 1e-3 of the diagonal).
inline SynthModel emit(const ModelSpec& spec, const std::string& model_id) {
  using namespace emit_detail;
  const Block& blk = spec.block;
  for (int k = 0; k < 3; ++k)
    if (!(blk.hi[k] > blk.lo[k])) throw RejectedEdit("block has non-positive extent");
  Builder bld;
  bld.diag = (blk.hi - blk.lo).norm();
  const double tol = 1e-9 * bld.diag;
  const double min_len = 1e-3 * bld.diag;
  const double margin = 5e-3 * bld.diag;

  auto bevels_on = [&](int box) {
    std::vector<Bevel> out;
    for (const auto& b : spec.bevels)
      if (b.box == box) out.push_back(b);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!valid_box_edge(out[i].fa, out[i].fb)) throw RejectedEdit("bevel on a non-edge");
      if (!(out[i].size > 0.0)) throw RejectedEdit("bevel size must be positive");
      for (std::size_t j = 0; j < i; ++j)
        if (box_edges_share_corner(out[i].fa, out[i].fb, out[j].fa, out[j].fb))
          throw RejectedEdit("bevels share a corner");
    }
    return out;
  };
  auto box_with_bevels = [&](const Vec3& lo, const Vec3& hi, auto name_of, int box) {
    std::vector<HalfSpace> planes;
    for (int f = 0; f < 6; ++f) planes.push_back(box_plane(lo, hi, f, name_of(f)));
    for (const auto& bv : bevels_on(box))
      for (auto& h : bevel_planes(bv, planes[bv.fa], planes[bv.fb])) planes.push_back(std::move(h));
    return planes;
  };

  // block
  const auto root_planes = box_with_bevels(blk.lo, blk.hi, root_face_name, 0);
  const Polyhedron root = build_polyhedron(root_planes, tol);
  if (!root.ok) throw RejectedEdit("block: " + root.error);
  bld.add_vertices(root);
  std::map<std::string, std::size_t> face_slot;
  std::map<std::string, std::vector<Vec3>> root_rings;
  for (const auto& f : root.faces) {
    RawFace rf;
    rf.name = f.plane;
    rf.n = f.normal;
    for (const auto& h : root_planes)
      if (h.name == f.plane) rf.d = h.d;
    rf.loops.push_back({true, bld.ring_names(root, f), {}, false});
    std::vector<Vec3> ring;
    for (std::size_t i : f.ring) ring.push_back(root.vertices[i].pos);
    root_rings[f.plane] = ring;
    face_slot[f.plane] = bld.faces.size();
    bld.faces.push_back(std::move(rf));
  }

  // footprints per host face and solid AABBs for the interference checks
  std::map<int, std::vector<Footprint>> footprints;
  std::vector<std::pair<Vec3, Vec3>> boss_boxes, hole_boxes;
  auto add_footprint_circle = [&](int f, const Vec3& c, double r) {
    Footprint fp;
    fp.center = c;
    fp.radius = r;
    fp.lo = fp.hi = c;
    circle_aabb({c, face_normal(f), r}, fp.lo, fp.hi);
    footprints[f].push_back(fp);
  };

  // rectangular bosses
  for (const auto& rb : spec.rect_bosses) {
    const auto [lo, hi] = rect_boss_box(blk, rb);
    for (int k = 0; k < 3; ++k)
      if (!(hi[k] - lo[k] >= min_len)) throw RejectedEdit("boss too thin");
    for (const auto& bv : spec.bevels)
      if (bv.box == rb.id) {
        const int bottom = rb.host ^ 1;
        if (bv.fa == bottom || bv.fb == bottom) throw RejectedEdit("bevel on a boss base edge");
      }
    auto name_of = [&rb](int g) { return rect_boss_face_name(rb, g); };
    const auto planes = box_with_bevels(lo, hi, name_of, rb.id);
    const Polyhedron poly = build_polyhedron(planes, tol);
    if (!poly.ok) throw RejectedEdit("boss: " + poly.error);
    bld.add_vertices(poly);
    const std::string host = root_face_name(rb.host);
    if (!face_slot.count(host)) throw RejectedEdit("boss host face missing");
    for (const auto& f : poly.faces) {
      if (f.plane == host) {
        bld.faces[face_slot[host]].loops.push_back({false, bld.ring_names(poly, f), {}, false});
        continue;
      }
      RawFace rf;
      rf.name = f.plane;
      rf.n = f.normal;
      for (const auto& h : planes)
        if (h.name == f.plane) rf.d = h.d;
      rf.loops.push_back({true, bld.ring_names(poly, f), {}, false});
      face_slot[f.plane] = bld.faces.size();
      bld.faces.push_back(std::move(rf));
    }
    Footprint fp;
    fp.lo = lo;
    fp.hi = hi;
    fp.lo[face_axis(rb.host)] = fp.hi[face_axis(rb.host)] = root_offset(blk, rb.host);
    fp.center = 0.5 * (fp.lo + fp.hi);
    for (int c = 0; c < 4; ++c) {
      Vec3 p = fp.lo;
      p[u_axis(rb.host)] = (c & 1) ? fp.hi[u_axis(rb.host)] : fp.lo[u_axis(rb.host)];
      p[v_axis(rb.host)] = (c & 2) ? fp.hi[v_axis(rb.host)] : fp.lo[v_axis(rb.host)];
      fp.corners.push_back(p);
    }
    footprints[rb.host].push_back(fp);
    boss_boxes.emplace_back(lo, hi);
  }
  for (const auto& bv : spec.bevels)
    if (bv.box != 0 && !spec.rect_boss(bv.box)) throw RejectedEdit("bevel on a missing boss");

  // cylindrical bosses
  for (const auto& cb : spec.cyl_bosses) {
    if (!(cb.radius >= min_len) || !(cb.height >= min_len)) throw RejectedEdit("cylinder boss too small");
    const std::string host = root_face_name(cb.host);
    if (!face_slot.count(host)) throw RejectedEdit("boss host face missing");
    const std::string id = "C" + std::to_string(cb.id);
    const Vec3 n = face_normal(cb.host);
    const Vec3 c0 = host_point(blk, cb.host, cb.cu, cb.cv);
    const Vec3 c1 = c0 + cb.height * n;
    const std::string cyl = id + "cyl", top = id + "top";
    const std::string e0 = edge_name(cyl, host), e1 = edge_name(cyl, top);
    bld.circles[e0] = {c0, n, cb.radius};
    bld.circles[e1] = {c1, n, cb.radius};
    bld.faces[face_slot[host]].loops.push_back({false, {}, e0, true});
    RawFace side;
    side.name = cyl;
    side.kind = GeomKind::Cylinder;
    side.n = n;
    side.base = c0;
    side.length = cb.height;
    side.radius = cb.radius;
    side.sense = 1.0;
    side.loops = {{true, {}, e0, false}, {false, {}, e1, true}};
    RawFace cap;
    cap.name = top;
    cap.n = n;
    cap.d = n.dot(c1);
    cap.loops = {{true, {}, e1, false}};
    face_slot[cyl] = bld.faces.size();
    bld.faces.push_back(std::move(side));
    face_slot[top] = bld.faces.size();
    bld.faces.push_back(std::move(cap));
    add_footprint_circle(cb.host, c0, cb.radius);
    Vec3 lo = c0, hi = c0;
    circle_aabb({c0, n, cb.radius}, lo, hi);
    circle_aabb({c1, n, cb.radius}, lo, hi);
    boss_boxes.emplace_back(lo, hi);
  }

  // holes
  for (const auto& h : spec.holes) {
    const int k = face_axis(h.host);
    const double thickness = blk.hi[k] - blk.lo[k];
    const double depth = h.through ? thickness : h.depth;
    if (!(h.radius >= min_len) || !(depth >= min_len)) throw RejectedEdit("hole too small");
    const std::string host = root_face_name(h.host);
    const std::string exit_face = root_face_name(h.host ^ 1);
    if (!face_slot.count(host) || (h.through && !face_slot.count(exit_face)))
      throw RejectedEdit("hole host face missing");
    const std::string id = "H" + std::to_string(h.id);
    const std::string cyl = id + "cyl";
    const Vec3 n = face_normal(h.host);
    const Vec3 c0 = host_point(blk, h.host, h.cu, h.cv);
    const Vec3 c1 = c0 - depth * n;
    const std::string e0 = edge_name(cyl, host);
    bld.circles[e0] = {c0, n, h.radius};
    bld.faces[face_slot[host]].loops.push_back({false, {}, e0, true});
    RawFace side;
    side.name = cyl;
    side.kind = GeomKind::Cylinder;
    side.n = -n;
    side.base = c0;
    side.length = depth;
    side.radius = h.radius;
    side.sense = -1.0;
    std::string e1;
    if (h.through) {
      e1 = edge_name(cyl, exit_face);
      bld.circles[e1] = {c1, n, h.radius};
      bld.faces[face_slot[exit_face]].loops.push_back({false, {}, e1, false});
      add_footprint_circle(h.host ^ 1, c1, h.radius);
    } else {
      const std::string bot = id + "bot";
      e1 = edge_name(bot, cyl);
      bld.circles[e1] = {c1, n, h.radius};
      RawFace cap;
      cap.name = bot;
      cap.n = n;
      cap.d = n.dot(c1);
      cap.loops = {{true, {}, e1, false}};
      face_slot[bot] = bld.faces.size();
      bld.faces.push_back(std::move(cap));
    }
    side.loops = {{true, {}, e0, false}, {false, {}, e1, true}};
    face_slot[cyl] = bld.faces.size();
    bld.faces.push_back(std::move(side));
    add_footprint_circle(h.host, c0, h.radius);
    // the hole must stay inside every other block plane, bevels included
    for (const auto& pl : root_planes) {
      if (pl.name == host || (h.through && pl.name == exit_face)) continue;
      for (const Vec3& c : {c0, c1}) {
        const double reach = pl.n.dot(c) + h.radius * std::sqrt(std::max(0.0, 1.0 - std::pow(pl.n.dot(n), 2)));
        if (reach > pl.d - margin) throw RejectedEdit("hole breaks through the block");
      }
    }
    Vec3 lo = c0, hi = c0;
    circle_aabb({c0, n, h.radius}, lo, hi);
    circle_aabb({c1, n, h.radius}, lo, hi);
    hole_boxes.emplace_back(lo, hi);
  }

  // footprints stay inside their host faces and apart from each other
  for (const auto& [f, fps] : footprints) {
    const auto& ring = root_rings.at(root_face_name(f));
    const Vec3 n = face_normal(f);
    for (std::size_t i = 0; i < fps.size(); ++i) {
      const auto& fp = fps[i];
      if (fp.corners.empty()) {
        if (polygon_inset(ring, n, fp.center) < fp.radius + margin) throw RejectedEdit("feature leaves its face");
      } else {
        for (const auto& c : fp.corners)
          if (polygon_inset(ring, n, c) < margin) throw RejectedEdit("feature leaves its face");
      }
      for (std::size_t j = 0; j < i; ++j)
        if (!aabb_disjoint(fp.lo, fp.hi, fps[j].lo, fps[j].hi, margin))
          throw RejectedEdit("features overlap on a face");
    }
  }
  for (std::size_t i = 0; i < boss_boxes.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (!aabb_disjoint(boss_boxes[i].first, boss_boxes[i].second, boss_boxes[j].first, boss_boxes[j].second, margin))
        throw RejectedEdit("bosses intersect");
  for (std::size_t i = 0; i < hole_boxes.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (!aabb_disjoint(hole_boxes[i].first, hole_boxes[i].second, hole_boxes[j].first, hole_boxes[j].second, margin))
        throw RejectedEdit("holes intersect");

  // ---- assemble the graph --------------------------------------------------
  SynthModel out;
  out.spec = spec;
  struct LineEdge {
    std::string a, b;  // vertex names, a < b
  };
  std::map<std::string, LineEdge> lines;
  struct NamedLoop {
    bool outer;
    std::vector<std::pair<std::string, bool>> uses;  // (edge name, reversed)
  };
  std::map<std::string, std::vector<NamedLoop>> face_loops;

  for (const auto& rf : bld.faces) {
    std::vector<NamedLoop> loops;
    for (const auto& rl : rf.loops) {
      NamedLoop nl{rl.outer, {}};
      if (rl.ring.empty()) {
        nl.uses.emplace_back(rl.circle, rl.circle_reversed);
      } else {
        for (std::size_t i = 0; i < rl.ring.size(); ++i) {
          const std::string& va = rl.ring[i];
          const std::string& vb = rl.ring[(i + 1) % rl.ring.size()];
          // the edge is named by the two planes the endpoints share besides this face
          PolyVertex pa, pb;
          auto split = [](const std::string& vname) {
            std::array<std::string, 3> parts;
            std::size_t start = 2, k = 0;
            for (std::size_t pos = start; pos <= vname.size(); ++pos)
              if (pos == vname.size() || vname[pos] == '|') {
                parts[k++] = vname.substr(start, pos - start);
                start = pos + 1;
              }
            return parts;
          };
          pa.planes = split(va);
          pb.planes = split(vb);
          const std::string other = other_shared_plane(pa, pb, rf.name);
          if (other.empty()) throw RejectedEdit("broken face ring on " + rf.name);
          const std::string en = edge_name(rf.name, other);
          lines[en] = va < vb ? LineEdge{va, vb} : LineEdge{vb, va};
          nl.uses.emplace_back(en, !(va < vb));
        }
        auto first = std::min_element(nl.uses.begin(), nl.uses.end());
        std::rotate(nl.uses.begin(), first, nl.uses.end());
      }
      loops.push_back(std::move(nl));
    }
    std::stable_sort(loops.begin() + 1, loops.end(),
                     [](const NamedLoop& a, const NamedLoop& b) { return a.uses.front().first < b.uses.front().first; });
    face_loops[rf.name] = std::move(loops);
  }

  for (const auto& [name, pos] : bld.vertices) out.vertex_names.push_back(name);
  for (const auto& [name, le] : lines) out.edge_names.push_back(name);
  for (const auto& [name, c] : bld.circles) out.edge_names.push_back(name);
  std::sort(out.edge_names.begin(), out.edge_names.end());
  for (const auto& rf : bld.faces) out.face_names.push_back(rf.name);
  std::sort(out.face_names.begin(), out.face_names.end());
  for (std::size_t i = 1; i < out.edge_names.size(); ++i)
    if (out.edge_names[i] == out.edge_names[i - 1]) throw RejectedEdit("duplicate edge " + out.edge_names[i]);

  BRepGraph& g = out.graph;
  g.model_id = model_id;
  std::map<std::string, std::size_t> vidx, eidx;
  for (std::size_t i = 0; i < out.vertex_names.size(); ++i) {
    vidx[out.vertex_names[i]] = i;
    g.vertices.push_back({bld.vertices.at(out.vertex_names[i])});
  }
  // only vertices used by edges survive (all are, for valid polyhedra)
  for (std::size_t i = 0; i < out.edge_names.size(); ++i) {
    const auto& en = out.edge_names[i];
    eidx[en] = i;
    Edge e;
    if (auto it = lines.find(en); it != lines.end()) {
      const Vec3& a = bld.vertices.at(it->second.a);
      const Vec3& b = bld.vertices.at(it->second.b);
      if ((b - a).norm() < min_len) throw RejectedEdit("edge shorter than 1e-3 of the diagonal");
      e.geom = line_geometry(a, b);
      e.vertices = std::array<std::size_t, 2>{vidx.at(it->second.a), vidx.at(it->second.b)};
    } else {
      e.geom = circle_geometry(bld.circles.at(en));
    }
    g.edges.push_back(std::move(e));
  }
  std::map<std::string, const RawFace*> raw;
  for (const auto& rf : bld.faces) raw[rf.name] = &rf;
  for (const auto& fname : out.face_names) {
    const RawFace& rf = *raw.at(fname);
    Face face;
    for (const auto& nl : face_loops.at(fname)) {
      Loop loop;
      loop.outer = nl.outer;
      for (const auto& [en, rev] : nl.uses) loop.edges.push_back({eidx.at(en), rev});
      face.loops.push_back(g.loops.size());
      g.loops.push_back(std::move(loop));
    }
    GeometrySignature& geo = face.geom;
    geo.kind = rf.kind;
    if (rf.kind == GeomKind::Plane) {
      geo.params = plane_params(rf.n, rf.d);
      const auto [u, v] = plane_frame(rf.n);
      const Vec3 origin = rf.d * rf.n;
      auto to2 = [&](const Vec3& p) { return Eigen::Vector2d((p - origin).dot(u), (p - origin).dot(v)); };
      Region2 region;
      for (const auto& rl : rf.loops) {
        if (rl.ring.empty()) {
          const Circle& c = bld.circles.at(rl.circle);
          if (rl.outer) {
            region.outer_center = to2(c.center);
            region.outer_radius = c.radius;
          } else {
            region.hole_circles.emplace_back(to2(c.center), c.radius);
          }
        } else {
          std::vector<Eigen::Vector2d> poly;
          for (const auto& vn : rl.ring) poly.push_back(to2(bld.vertices.at(vn)));
          (rl.outer ? region.outer_poly : region.hole_polys.emplace_back()) = std::move(poly);
        }
      }
      const double area = region_area(region);
      if (!(area > 0.0)) throw RejectedEdit("face with no area");
      const auto pts = leaf_medoids(region);
      for (const auto& p : pts) {
        geo.samples.push_back(origin + p.x() * u + p.y() * v);
        geo.weights.push_back(area / static_cast<double>(kFaceSamples));
      }
    } else {
      set_param_vec(geo.params, 0, axis_foot(rf.base, rf.n));
      set_param_vec(geo.params, 3, rf.n);
      geo.params[6] = rf.radius;
      geo.params[7] = rf.sense;
      const auto [u, v] = plane_frame(rf.n);
      const double w = 2.0 * std::numbers::pi * rf.radius * rf.length / static_cast<double>(kFaceSamples);
      for (int a = 0; a < 8; ++a)
        for (int t = 0; t < 8; ++t) {
          const double th = (a + 0.5) * 2.0 * std::numbers::pi / 8.0;
          const double s = (t + 0.5) / 8.0 * rf.length;
          geo.samples.push_back(rf.base + s * rf.n + rf.radius * (std::cos(th) * u + std::sin(th) * v));
          geo.weights.push_back(w);
        }
    }
    g.faces.push_back(std::move(face));
  }

  // bbox over vertices, samples and circle extremes
  Vec3 lo = g.vertices.empty() ? g.faces.front().geom.samples.front() : g.vertices.front().pos;
  Vec3 hi = lo;
  auto grow = [&](const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& v : g.vertices) grow(v.pos);
  for (const auto& f : g.faces)
    for (const auto& s : f.geom.samples) grow(s);
  for (const auto& e : g.edges)
    for (const auto& s : e.geom.samples) grow(s);
  for (const auto& [name, c] : bld.circles) circle_aabb(c, lo, hi);
  g.bbox_min = lo;
  g.bbox_max = hi;
  g.finalize();
  return out;
}

}  // namespace brepmatch::synth
