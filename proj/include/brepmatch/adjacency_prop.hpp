#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <vector>

#include "brepmatch/brep.hpp"
#include "brepmatch/exact_match.hpp"
#include "brepmatch/matching.hpp"

namespace brepmatch {

// Canonical neighbourhood encoding. Tokens are indices into the ORIGINAL
// model (the partner index for updated-side entities), or -1 when unmatched.
struct AdjacencySignature {
  std::vector<std::vector<std::int64_t>> groups;
  double matched_ratio = 0.0;

  bool operator==(const AdjacencySignature& o) const { return groups == o.groups; }
};

enum class Side { Original, Updated };

namespace adjprop_detail {

inline std::int64_t token(const Matching& m, Side side, EntityRef r) {
  if (side == Side::Original) return m.has_orig(r) ? static_cast<std::int64_t>(r.index) : -1;
  auto o = m.orig_of(r);
  return o ? static_cast<std::int64_t>(o->index) : -1;
}

inline std::vector<std::int64_t> min_rotation(const std::vector<std::int64_t>& seq) {
  std::vector<std::int64_t> best = seq;
  std::vector<std::int64_t> rot = seq;
  for (std::size_t k = 1; k < seq.size(); ++k) {
    std::rotate(rot.begin(), rot.begin() + 1, rot.end());
    if (rot < best) best = rot;
  }
  return best;
}

}  // namespace adjprop_detail

inline AdjacencySignature adjacency_signature(const BRepGraph& b, const Matching& m, Side side, EntityRef r) {
  using adjprop_detail::token;
  AdjacencySignature sig;
  std::size_t total = 0, matched = 0;
  auto count = [&](const std::vector<std::int64_t>& v, std::size_t skip_prefix = 0) {
    for (std::size_t i = skip_prefix; i < v.size(); ++i) {
      ++total;
      matched += v[i] >= 0;
    }
  };
  switch (r.kind) {
    case Kind::Face: {
      for (std::size_t l : b.faces[r.index].loops) {
        const auto& loop = b.loops[l];
        std::vector<std::int64_t> seq;
        for (const auto& use : loop.edges) seq.push_back(token(m, side, {Kind::Edge, use.edge}));
        count(seq);
        std::vector<std::int64_t> group{loop.outer ? 1 : 0};
        const auto rot = adjprop_detail::min_rotation(seq);
        group.insert(group.end(), rot.begin(), rot.end());
        sig.groups.push_back(std::move(group));
      }
      std::sort(sig.groups.begin(), sig.groups.end());
      break;
    }
    case Kind::Edge: {
      std::vector<std::int64_t> fs, vs;
      for (std::size_t f : b.edge_faces[r.index]) fs.push_back(token(m, side, {Kind::Face, f}));
      if (b.edges[r.index].vertices)
        for (std::size_t v : *b.edges[r.index].vertices) vs.push_back(token(m, side, {Kind::Vertex, v}));
      std::sort(fs.begin(), fs.end());
      std::sort(vs.begin(), vs.end());
      count(fs);
      count(vs);
      sig.groups = {fs, vs};
      break;
    }
    case Kind::Vertex: {
      std::vector<std::int64_t> es;
      for (std::size_t e : b.vertex_edges[r.index]) es.push_back(token(m, side, {Kind::Edge, e}));
      std::sort(es.begin(), es.end());
      count(es);
      sig.groups = {es};
      break;
    }
  }
  sig.matched_ratio = total ? static_cast<double>(matched) / static_cast<double>(total) : 0.0;
  return sig;
}

// Entities whose signature reads the match state of r.
inline std::vector<EntityRef> signature_dependents(const BRepGraph& b, EntityRef r) {
  std::vector<EntityRef> out;
  switch (r.kind) {
    case Kind::Face:
      for (std::size_t l : b.faces[r.index].loops)
        for (const auto& use : b.loops[l].edges) out.push_back({Kind::Edge, use.edge});
      break;
    case Kind::Edge:
      for (std::size_t f : b.edge_faces[r.index]) out.push_back({Kind::Face, f});
      if (b.edges[r.index].vertices)
        for (std::size_t v : *b.edges[r.index].vertices) out.push_back({Kind::Vertex, v});
      break;
    case Kind::Vertex:
      for (std::size_t e : b.vertex_edges[r.index]) out.push_back({Kind::Edge, e});
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline bool coaxial(const GeometrySignature& a, const GeometrySignature& b, double delta) {
  if (a.kind != b.kind || (a.kind != GeomKind::Cylinder && a.kind != GeomKind::Cone)) return false;
  Params pa{}, pb{}, pbf{};
  const Params fb = flipped_params(b);
  for (int k = 0; k < 6; ++k) {
    pa[k] = a.params[k];
    pb[k] = b.params[k];
    pbf[k] = fb[k];
  }
  return std::min(params_distance(pa, pb), params_distance(pa, pbf)) <= delta;
}

// Iteratively matches updated-model entities whose adjacency signature equals
// that of exactly one unmatched original entity (after the class-preserving
// and coaxial tie-breaks). Highest matched ratio first; ties by (kind, index).
inline Matching propagate(const BRepGraph& bo, const BRepGraph& bu, const Matching& init, double delta) {
  Matching m = init;
  struct Entry {
    double ratio;
    EntityRef ref;
    std::uint64_t version;
    bool operator<(const Entry& o) const {  // max-heap: larger ratio first, then smaller ref
      if (ratio != o.ratio) return ratio < o.ratio;
      return o.ref < ref;
    }
  };
  std::priority_queue<Entry> queue;
  std::vector<std::vector<std::uint64_t>> version(3);
  for (Kind k : kAllKinds) version[static_cast<int>(k)].assign(bu.count(k), 0);

  auto push = [&](EntityRef r) {
    if (m.has_upd(r)) return;
    auto& v = version[static_cast<int>(r.kind)][r.index];
    ++v;
    queue.push({adjacency_signature(bu, m, Side::Updated, r).matched_ratio, r, v});
  };
  for (Kind k : kAllKinds)
    for (std::size_t i = 0; i < bu.count(k); ++i) push({k, i});

  while (!queue.empty()) {
    const Entry top = queue.top();
    queue.pop();
    const EntityRef u = top.ref;
    if (m.has_upd(u) || version[static_cast<int>(u.kind)][u.index] != top.version) continue;
    const auto sig_u = adjacency_signature(bu, m, Side::Updated, u);
    // no matched neighbour: nothing to propagate from
    if (sig_u.matched_ratio <= 0.0) continue;

    std::vector<std::size_t> cands;
    for (std::size_t i = 0; i < bo.count(u.kind); ++i) {
      const EntityRef o{u.kind, i};
      if (m.has_orig(o)) continue;
      if (adjacency_signature(bo, m, Side::Original, o) == sig_u) cands.push_back(i);
    }
    const auto& gu = bu.geom(u);
    if (cands.size() > 1) {
      std::vector<std::size_t> same_class;
      for (std::size_t i : cands)
        if (bo.geom({u.kind, i}).kind == gu.kind) same_class.push_back(i);
      if (!same_class.empty()) cands = same_class;
    }
    if (cands.size() > 1) {
      std::vector<std::size_t> axial;
      for (std::size_t i : cands)
        if (coaxial(bo.geom({u.kind, i}), gu, delta)) axial.push_back(i);
      if (!axial.empty()) cands = axial;
    }
    if (cands.size() != 1) continue;  // ambiguous: dropped until a neighbour changes

    m.add({u.kind, cands[0]}, u, Provenance::Propagated);
    for (const auto& d : signature_dependents(bu, u)) push(d);
  }
  return m;
}

}  // namespace brepmatch
