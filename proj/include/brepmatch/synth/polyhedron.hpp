#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "brepmatch/brep.hpp"

namespace brepmatch::synth {

// Named half-space n.x <= d with unit outward normal n.
struct HalfSpace {
  std::string name;
  Vec3 n = Vec3::UnitZ();
  double d = 0.0;
};

struct PolyVertex {
  Vec3 pos = Vec3::Zero();
  std::array<std::string, 3> planes;  // sorted
  std::string name() const { return "V:" + planes[0] + "|" + planes[1] + "|" + planes[2]; }
};

struct PolyFace {
  std::string plane;
  Vec3 normal = Vec3::UnitZ();
  std::vector<std::size_t> ring;  // vertex indices, counterclockwise about the outward normal
};

// Convex polyhedron as the intersection of named half-spaces. Every vertex
// must lie on exactly three planes and every plane must carry a face;
// anything else is reported as degenerate.
struct Polyhedron {
  std::vector<PolyVertex> vertices;
  std::vector<PolyFace> faces;
  bool ok = false;
  std::string error;
};

inline std::string edge_name(const std::string& a, const std::string& b) {
  return a < b ? "E:" + a + "|" + b : "E:" + b + "|" + a;
}

// Orthonormal (u, v) with u x v = n; u derived from the world axis least
// aligned with n (lowest index on ties).
inline std::pair<Vec3, Vec3> plane_frame(const Vec3& n) {
  int axis = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(n[k]) < std::abs(n[axis]) - 1e-12) axis = k;
  Vec3 helper = Vec3::Unit(axis);
  Vec3 u = (helper - helper.dot(n) * n).normalized();
  Vec3 v = n.cross(u);
  return {u, v};
}

inline Polyhedron build_polyhedron(std::vector<HalfSpace> planes, double tol) {
  Polyhedron poly;
  std::sort(planes.begin(), planes.end(), [](const HalfSpace& a, const HalfSpace& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < planes.size(); ++i)
    if (planes[i].name == planes[i - 1].name) {
      poly.error = "duplicate plane " + planes[i].name;
      return poly;
    }
  const std::size_t n = planes.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) {
        Eigen::Matrix3d A;
        A.row(0) = planes[a].n.transpose();
        A.row(1) = planes[b].n.transpose();
        A.row(2) = planes[c].n.transpose();
        if (std::abs(A.determinant()) < 1e-9) continue;
        const Vec3 rhs(planes[a].d, planes[b].d, planes[c].d);
        const Vec3 x = A.partialPivLu().solve(rhs);
        bool inside = true;
        int incident = 0;
        for (const auto& p : planes) {
          const double s = p.n.dot(x) - p.d;
          if (s > tol) {
            inside = false;
            break;
          }
          if (std::abs(s) <= tol) ++incident;
        }
        if (!inside) continue;
        if (incident != 3) {
          poly.error = "vertex on more than three planes";
          return poly;
        }
        poly.vertices.push_back({x, {planes[a].name, planes[b].name, planes[c].name}});
      }
  for (std::size_t i = 0; i < poly.vertices.size(); ++i)
    for (std::size_t j = i + 1; j < poly.vertices.size(); ++j)
      if ((poly.vertices[i].pos - poly.vertices[j].pos).norm() <= tol) {
        poly.error = "coincident vertices";
        return poly;
      }
  std::sort(poly.vertices.begin(), poly.vertices.end(),
            [](const PolyVertex& x, const PolyVertex& y) { return x.planes < y.planes; });

  for (const auto& p : planes) {
    PolyFace f;
    f.plane = p.name;
    f.normal = p.n;
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
      const auto& pl = poly.vertices[i].planes;
      if (std::find(pl.begin(), pl.end(), p.name) != pl.end()) f.ring.push_back(i);
    }
    if (f.ring.size() < 3) {
      poly.error = "plane " + p.name + " carries no face";
      return poly;
    }
    Vec3 c = Vec3::Zero();
    for (std::size_t i : f.ring) c += poly.vertices[i].pos;
    c /= static_cast<double>(f.ring.size());
    const auto [u, v] = plane_frame(p.n);
    std::vector<std::pair<double, std::size_t>> ang;
    for (std::size_t i : f.ring) {
      const Vec3 r = poly.vertices[i].pos - c;
      ang.emplace_back(std::atan2(r.dot(v), r.dot(u)), i);
    }
    std::sort(ang.begin(), ang.end());
    f.ring.clear();
    for (const auto& [a, i] : ang) f.ring.push_back(i);
    // start at the lexicographically smallest vertex
    auto first = std::min_element(f.ring.begin(), f.ring.end());
    std::rotate(f.ring.begin(), first, f.ring.end());
    // consecutive vertices must share exactly this plane and one other
    for (std::size_t k = 0; k < f.ring.size(); ++k) {
      const auto& va = poly.vertices[f.ring[k]].planes;
      const auto& vb = poly.vertices[f.ring[(k + 1) % f.ring.size()]].planes;
      int shared = 0;
      for (const auto& s : va) shared += std::find(vb.begin(), vb.end(), s) != vb.end();
      if (shared != 2) {
        poly.error = "face " + p.name + " has a non-manifold ring";
        return poly;
      }
    }
    poly.faces.push_back(std::move(f));
  }
  poly.ok = true;
  return poly;
}

// The plane shared by two ring-adjacent vertices other than `face`.
inline std::string other_shared_plane(const PolyVertex& a, const PolyVertex& b, const std::string& face) {
  for (const auto& s : a.planes)
    if (s != face && std::find(b.planes.begin(), b.planes.end(), s) != b.planes.end()) return s;
  return {};
}

}  // namespace brepmatch::synth
