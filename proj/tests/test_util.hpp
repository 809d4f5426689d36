#pragma once

#include <string>

#include "brepmatch/synth/dataset.hpp"

#ifndef BREPMATCH_TEST_DATA
#define BREPMATCH_TEST_DATA "tests/data"
#endif

inline std::string test_data(const std::string& name) { return std::string(BREPMATCH_TEST_DATA) + "/" + name; }

// Small deterministic complete-mix dataset shared by several suites.
inline const brepmatch::Dataset& small_dataset() {
  static const brepmatch::Dataset ds = brepmatch::generate_dataset(12, 2, brepmatch::Mix::Complete, 99);
  return ds;
}

inline std::size_t primary_count(const brepmatch::BRepGraph& b) { return b.faces.size() + b.edges.size() + b.vertices.size(); }

// Rigid translation of every stored position.
inline brepmatch::BRepGraph translated(const brepmatch::BRepGraph& b, const brepmatch::Vec3& off) {
  using namespace brepmatch;
  BRepGraph m = b;
  auto shift = [&](GeometrySignature& g) {
    for (auto& s : g.samples) s += off;
    const auto layout = param_layout(g.kind);
    if (layout.position < 0) return;
    Vec3 p = param_vec(g.params, layout.position) + off;
    if (layout.position_slides && layout.directions[0] >= 0) {
      // keep the foot point canonical: closest point to the origin
      const Vec3 d = param_vec(g.params, layout.directions[0]);
      p = g.kind == GeomKind::Plane ? Vec3(d.dot(p) * d) : Vec3(p - d.dot(p) * d);
    }
    set_param_vec(g.params, layout.position, p);
  };
  for (auto& v : m.vertices) v.pos += off;
  for (auto& e : m.edges) shift(e.geom);
  for (auto& f : m.faces) shift(f.geom);
  m.bbox_min += off;
  m.bbox_max += off;
  m.finalize();
  return m;
}
