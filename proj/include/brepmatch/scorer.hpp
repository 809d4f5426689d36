#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "brepmatch/autodiff.hpp"
#include "brepmatch/brep.hpp"
#include "brepmatch/features.hpp"
#include "brepmatch/matching.hpp"
#include "brepmatch/model_params.hpp"

namespace brepmatch {

enum EdgeType : int { kVertexEdge = 0, kEdgeLoop = 1, kLoopFace = 2, kFaceFace = 3, kPriorMatch = 4 };

// Incidence lists of one B-rep in the form the encoder consumes.
struct Topology {
  std::size_t n_faces = 0, n_edges = 0, n_vertices = 0, n_loops = 0;
  ad::Segments edge_vertices;  // per edge
  ad::Segments loop_edges;     // per loop
  ad::Segments face_loops;     // per face
  ad::Segments edge_loops;     // per edge
  ad::Segments vertex_edges;   // per vertex
  std::vector<std::size_t> loop_face;

  std::size_t node_count() const { return n_faces + n_edges + n_vertices + n_loops; }
  // Node order inside the joint graph: faces, edges, vertices, loops.
  std::size_t node(Kind k, std::size_t i) const {
    switch (k) {
      case Kind::Face: return i;
      case Kind::Edge: return n_faces + i;
      case Kind::Vertex: return n_faces + n_edges + i;
    }
    return i;
  }
  std::size_t loop_node(std::size_t l) const { return n_faces + n_edges + n_vertices + l; }
};

inline Topology build_topology(const BRepGraph& b) {
  Topology t;
  t.n_faces = b.faces.size();
  t.n_edges = b.edges.size();
  t.n_vertices = b.vertices.size();
  t.n_loops = b.loops.size();
  auto sorted = [](std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  for (const auto& e : b.edges) {
    std::vector<std::size_t> vs;
    if (e.vertices) vs = {(*e.vertices)[0], (*e.vertices)[1]};
    t.edge_vertices.add(sorted(vs));
  }
  for (const auto& l : b.loops) {
    std::vector<std::size_t> es;
    for (const auto& u : l.edges) es.push_back(u.edge);
    t.loop_edges.add(sorted(es));
  }
  for (const auto& f : b.faces) t.face_loops.add(sorted(f.loops));
  for (const auto& v : b.edge_loops) t.edge_loops.add(v);
  for (const auto& v : b.vertex_edges) t.vertex_edges.add(v);
  t.loop_face = b.loop_face;
  return t;
}

// Directed typed edges of the joint graph, before CSR packing.
struct EdgeTriples {
  std::vector<std::tuple<std::size_t, std::size_t, int>> items;  // (dst, src, type)
  void link(std::size_t a, std::size_t b, int type) {
    items.emplace_back(a, b, type);
    items.emplace_back(b, a, type);
  }
};

inline void add_topology_edges(const BRepGraph& b, const Topology& t, std::size_t base, EdgeTriples& out) {
  for (std::size_t e = 0; e < t.n_edges; ++e)
    for (std::size_t k = t.edge_vertices.offsets[e]; k < t.edge_vertices.offsets[e + 1]; ++k)
      out.link(base + t.node(Kind::Vertex, t.edge_vertices.items[k]), base + t.node(Kind::Edge, e), kVertexEdge);
  for (std::size_t l = 0; l < t.n_loops; ++l) {
    for (std::size_t k = t.loop_edges.offsets[l]; k < t.loop_edges.offsets[l + 1]; ++k)
      out.link(base + t.node(Kind::Edge, t.loop_edges.items[k]), base + t.loop_node(l), kEdgeLoop);
    if (t.loop_face[l] < t.n_faces) out.link(base + t.loop_node(l), base + t.node(Kind::Face, t.loop_face[l]), kLoopFace);
  }
  for (std::size_t f = 0; f < t.n_faces; ++f)
    for (std::size_t g : b.face_faces[f])
      if (g > f) out.link(base + f, base + g, kFaceFace);
}

inline ad::EdgeList pack_edges(EdgeTriples triples, std::size_t n_nodes) {
  std::sort(triples.items.begin(), triples.items.end());
  ad::EdgeList el;
  el.offsets.assign(n_nodes + 1, 0);
  for (const auto& [dst, src, type] : triples.items) {
    ++el.offsets[dst + 1];
    el.src.push_back(src);
    el.type.push_back(type);
  }
  for (std::size_t i = 0; i < n_nodes; ++i) el.offsets[i + 1] += el.offsets[i];
  return el;
}

// Everything about one (original, updated) pair that does not depend on the
// parameters or on the prior matching.
struct PairContext {
  const BRepGraph* bo = nullptr;
  const BRepGraph* bu = nullptr;
  Topology to, tu;
  FeatureTable fo, fu;
  EdgeTriples topo_edges;

  std::size_t upd_base() const { return to.node_count(); }
  std::size_t node_count() const { return to.node_count() + tu.node_count(); }
  std::size_t orig_node(EntityRef r) const { return to.node(r.kind, r.index); }
  std::size_t upd_node(EntityRef r) const { return upd_base() + tu.node(r.kind, r.index); }
};

inline PairContext make_context(const BRepGraph& bo, const BRepGraph& bu) {
  PairContext c;
  c.bo = &bo;
  c.bu = &bu;
  c.to = build_topology(bo);
  c.tu = build_topology(bu);
  const Frame frame = frame_of(bo);
  c.fo = extract_features(bo, frame);
  c.fu = extract_features(bu, frame);
  add_topology_edges(bo, c.to, 0, c.topo_edges);
  add_topology_edges(bu, c.tu, c.upd_base(), c.topo_edges);
  return c;
}

// Joint-graph edges: both topologies plus one undirected prior-match edge per pair.
inline ad::EdgeList joint_edges(const PairContext& c, const Matching& prior) {
  EdgeTriples t = c.topo_edges;
  for (const auto& p : prior.pairs()) t.link(c.orig_node(p.orig), c.upd_node(p.upd), kPriorMatch);
  return pack_edges(std::move(t), c.node_count());
}

// Parameters registered on a tape, optionally with gradient sinks.
class TapeParams {
public:
  TapeParams(ad::Tape& tape, const ModelParams& p, ModelParams* grads) : p_(p) {
    vars_.reserve(p.tensors.size());
    for (std::size_t i = 0; i < p.tensors.size(); ++i)
      vars_.push_back(tape.parameter(p.tensors[i], grads ? &grads->tensors[i] : nullptr));
  }
  ad::Var operator()(const std::string& name) const { return vars_[p_.index_of(name)]; }
  const ModelParams& params() const { return p_; }

private:
  const ModelParams& p_;
  std::vector<ad::Var> vars_;
};

// Per-entity embeddings; rows follow entity indices.
struct EmbeddingVars {
  ad::Var faces, edges, vertices, loops;
};

struct Embeddings {
  Matrix faces, edges, vertices, loops;
};

namespace scorer_detail {

inline ad::Var linear(ad::Tape& t, const TapeParams& P, const std::string& name, ad::Var x) {
  return t.tanh(t.add_row(t.matmul(x, P(name + ".w")), P(name + ".b")));
}

inline ad::Var linear2(ad::Tape& t, const TapeParams& P, const std::string& name, ad::Var x, ad::Var ctx) {
  return linear(t, P, name, t.concat_cols(x, ctx));
}

}  // namespace scorer_detail

// Hierarchical encoder: per layer an upward sweep vertex -> edge -> loop ->
// face and a downward sweep face -> loop -> edge -> vertex, each step a
// tanh-linear map of [own state | mean over neighbors]. Layers after the
// first are residual.
inline EmbeddingVars encode(ad::Tape& t, const Topology& topo, const FeatureTable& f, const TapeParams& P) {
  using scorer_detail::linear;
  using scorer_detail::linear2;
  const ModelConfig& c = P.params().config;
  if (f.faces.cols() != feat::kWidth || f.loops.cols() != feat::kLoopWidth)
    throw ShapeError("feature width does not match the encoder");
  if (static_cast<std::size_t>(f.faces.rows()) != topo.n_faces || static_cast<std::size_t>(f.edges.rows()) != topo.n_edges ||
      static_cast<std::size_t>(f.vertices.rows()) != topo.n_vertices || static_cast<std::size_t>(f.loops.rows()) != topo.n_loops)
    throw ShapeError("feature rows do not match the topology");
  EmbeddingVars h{t.constant(f.faces), t.constant(f.edges), t.constant(f.vertices), t.constant(f.loops)};
  for (int l = 0; l < c.encoder_layers; ++l) {
    const std::string pre = "enc" + std::to_string(l) + ".";
    const ad::Var v1 = linear(t, P, pre + "up.v", h.vertices);
    const ad::Var e1 = linear2(t, P, pre + "up.e", h.edges, t.segment_mean(v1, topo.edge_vertices));
    const ad::Var l1 = linear2(t, P, pre + "up.l", h.loops, t.segment_mean(e1, topo.loop_edges));
    const ad::Var f1 = linear2(t, P, pre + "up.f", h.faces, t.segment_mean(l1, topo.face_loops));
    const ad::Var f2 = linear(t, P, pre + "down.f", f1);
    const ad::Var l2 = linear2(t, P, pre + "down.l", l1, t.gather_rows(f2, topo.loop_face));
    const ad::Var e2 = linear2(t, P, pre + "down.e", e1, t.segment_mean(l2, topo.edge_loops));
    const ad::Var v2 = linear2(t, P, pre + "down.v", v1, t.segment_mean(e2, topo.vertex_edges));
    if (l == 0) {
      h = {f2, e2, v2, l2};
    } else {
      h = {t.add(h.faces, f2), t.add(h.edges, e2), t.add(h.vertices, v2), t.add(h.loops, l2)};
    }
  }
  return h;
}

inline Embeddings encode_values(const Topology& topo, const FeatureTable& f, const ModelParams& p) {
  ad::Tape t;
  TapeParams P(t, p, nullptr);
  const EmbeddingVars h = encode(t, topo, f, P);
  return {t.value(h.faces), t.value(h.edges), t.value(h.vertices), t.value(h.loops)};
}

using Candidate = std::pair<EntityRef, EntityRef>;

// Attention layers over the joint graph followed by the pair scorer.
// Returns one logit per candidate (column vector). `edges` must outlive any
// backward pass through the result.
inline ad::Var joint_logits(ad::Tape& t, const PairContext& ctx, EmbeddingVars eo, EmbeddingVars eu,
                            const ad::EdgeList& edges, const std::vector<Candidate>& candidates, const TapeParams& P) {
  const ModelConfig& c = P.params().config;
  ad::Var h = t.concat_rows({eo.faces, eo.edges, eo.vertices, eo.loops, eu.faces, eu.edges, eu.vertices, eu.loops});
  for (int l = 0; l < c.gat_layers; ++l) {
    const std::string pre = "gat" + std::to_string(l) + ".";
    const ad::Var q = t.matmul(h, P(pre + "wq"));
    const ad::Var k = t.matmul(h, P(pre + "wk"));
    const ad::Var v = t.matmul(h, P(pre + "wv"));
    const ad::Var a = t.attention(q, k, v, P(pre + "types"), P(pre + "aq"), P(pre + "ak"), P(pre + "at"), edges);
    h = t.tanh(t.add(h, t.add_row(t.matmul(a, P(pre + "wo")), P(pre + "bo"))));
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(candidates.size());
  for (const auto& [o, u] : candidates) pairs.emplace_back(ctx.orig_node(o), ctx.upd_node(u));
  const ad::Var a = t.add_row(t.matmul(h, P("mlp.w1o")), P("mlp.b1"));
  const ad::Var b = t.matmul(h, P("mlp.w1u"));
  return t.pair_logits(a, b, P("mlp.w2"), P("mlp.b2"), std::move(pairs));
}

// All same-kind pairs unmatched on both sides, ordered by (kind, orig, upd).
inline std::vector<Candidate> unmatched_candidates(const BRepGraph& bo, const BRepGraph& bu, const Matching& m) {
  std::vector<Candidate> out;
  for (Kind k : kAllKinds) {
    std::vector<std::size_t> uo, uu;
    for (std::size_t i = 0; i < bo.count(k); ++i)
      if (!m.has_orig({k, i})) uo.push_back(i);
    for (std::size_t j = 0; j < bu.count(k); ++j)
      if (!m.has_upd({k, j})) uu.push_back(j);
    for (std::size_t i : uo)
      for (std::size_t j : uu) out.push_back({{k, i}, {k, j}});
  }
  return out;
}

inline void check_candidates(const PairContext& ctx, const Matching& prior, const std::vector<Candidate>& candidates) {
  for (const auto& [o, u] : candidates) {
    if (o.kind != u.kind) throw InvalidCandidate("candidate mixes entity kinds");
    if (o.index >= ctx.bo->count(o.kind) || u.index >= ctx.bu->count(u.kind))
      throw InvalidCandidate("candidate index out of range");
    if (prior.has_orig(o) || prior.has_upd(u)) throw InvalidCandidate("candidate entity already matched");
  }
}

// Clamped match probabilities for `candidates` given cached embeddings.
inline std::vector<double> score_all(const PairContext& ctx, const Embeddings& eo, const Embeddings& eu, const Matching& prior,
                                     const std::vector<Candidate>& candidates, const ModelParams& p) {
  check_candidates(ctx, prior, candidates);
  if (candidates.empty()) return {};
  ad::Tape t;
  TapeParams P(t, p, nullptr);
  const EmbeddingVars vo{t.constant(eo.faces), t.constant(eo.edges), t.constant(eo.vertices), t.constant(eo.loops)};
  const EmbeddingVars vu{t.constant(eu.faces), t.constant(eu.edges), t.constant(eu.vertices), t.constant(eu.loops)};
  const ad::EdgeList edges = joint_edges(ctx, prior);
  const Matrix& z = t.value(joint_logits(t, ctx, vo, vu, edges, candidates, P));
  std::vector<double> out(candidates.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(ad::sigmoid(z(static_cast<Eigen::Index>(i), 0)), ad::kProbClamp, 1.0 - ad::kProbClamp);
  return out;
}

inline std::vector<double> score_all(const BRepGraph& bo, const BRepGraph& bu, const Matching& prior,
                                     const std::vector<Candidate>& candidates, const ModelParams& p) {
  const PairContext ctx = make_context(bo, bu);
  return score_all(ctx, encode_values(ctx.to, ctx.fo, p), encode_values(ctx.tu, ctx.fu, p), prior, candidates, p);
}

// Weighted binary cross-entropy of one prediction.
inline double loss(double p_hat, double label, double w) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) throw DomainError("probability outside [0, 1]");
  const double p = std::clamp(p_hat, ad::kProbClamp, 1.0 - ad::kProbClamp);
  return -(label * std::log(p) + w * (1.0 - label) * std::log(1.0 - p));
}

}  // namespace brepmatch
