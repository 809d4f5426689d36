#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "brepmatch/exact_match.hpp"
#include "brepmatch/scorer.hpp"
#include "brepmatch/synth/edits.hpp"
#include "test_util.hpp"

using namespace brepmatch;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double a = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-a, a);
  return m;
}

// Reverses face order and rotates vertex order.
struct Permuted {
  BRepGraph graph;
  std::vector<std::size_t> face_to, vertex_to;
};

Permuted permute(const BRepGraph& b) {
  Permuted p;
  p.graph = b;
  const std::size_t nf = b.faces.size(), nv = b.vertices.size();
  p.face_to.resize(nf);
  p.vertex_to.resize(nv);
  for (std::size_t i = 0; i < nf; ++i) p.face_to[i] = nf - 1 - i;
  for (std::size_t i = 0; i < nv; ++i) p.vertex_to[i] = (i + 3) % nv;
  for (std::size_t i = 0; i < nf; ++i) p.graph.faces[p.face_to[i]] = b.faces[i];
  for (std::size_t i = 0; i < nv; ++i) p.graph.vertices[p.vertex_to[i]] = b.vertices[i];
  for (auto& e : p.graph.edges)
    if (e.vertices) *e.vertices = {p.vertex_to[(*e.vertices)[0]], p.vertex_to[(*e.vertices)[1]]};
  p.graph.finalize();
  return p;
}

EntityRef mapped(const Permuted& p, EntityRef r) {
  if (r.kind == Kind::Face) return {r.kind, p.face_to[r.index]};
  if (r.kind == Kind::Vertex) return {r.kind, p.vertex_to[r.index]};
  return r;
}

const PairSample& sample_with_candidates() {
  for (const auto& s : small_dataset().samples)
    if (primary_count(*s.orig) <= 40 && primary_count(*s.upd) > primary_count(*s.orig)) return s;
  return small_dataset().samples.front();
}

}  // namespace

TEST(Scorer, ZeroParamsGiveZeroEmbeddingsAndEvenOdds) {
  const auto& s = sample_with_candidates();
  const ModelParams zero = zero_params();
  const PairContext ctx = make_context(*s.orig, *s.upd);
  const Embeddings e = encode_values(ctx.to, ctx.fo, zero);
  EXPECT_EQ(e.faces.rows(), static_cast<Eigen::Index>(s.orig->faces.size()));
  EXPECT_EQ(e.faces.cols(), zero.config.width);
  EXPECT_EQ(e.faces.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(e.edges.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(e.vertices.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(e.loops.cwiseAbs().maxCoeff(), 0.0);

  const Matching prior = coincidence_match(*s.orig, *s.upd, default_delta(*s.orig));
  const auto cand = unmatched_candidates(*s.orig, *s.upd, prior);
  ASSERT_FALSE(cand.empty());
  for (double p : score_all(*s.orig, *s.upd, prior, cand, zero)) EXPECT_EQ(p, 0.5);
}

TEST(Scorer, AttentionMatchesDirectEvaluation) {
  Rng rng(17);
  const int n = 5, heads = 2, dh = 3, types = 3;
  const Matrix Q = random_matrix(rng, n, heads * dh), K = random_matrix(rng, n, heads * dh), V = random_matrix(rng, n, heads * dh);
  const Matrix T = random_matrix(rng, types, heads * dh), aq = random_matrix(rng, heads, dh), ak = random_matrix(rng, heads, dh),
               at = random_matrix(rng, heads, dh);
  // (dst, src, type); node 4 has no incoming edge
  const std::vector<std::array<std::size_t, 3>> list{{0, 1, 0}, {0, 2, 1}, {0, 3, 2}, {1, 0, 0}, {2, 4, 1}, {3, 0, 2}, {3, 1, 1}};
  ad::EdgeList el;
  el.offsets.assign(n + 1, 0);
  for (const auto& [d, s, ty] : list) {
    ++el.offsets[d + 1];
    el.src.push_back(s);
    el.type.push_back(static_cast<int>(ty));
  }
  for (int i = 0; i < n; ++i) el.offsets[i + 1] += el.offsets[i];

  ad::Tape t;
  const Matrix got = t.value(t.attention(t.constant(Q), t.constant(K), t.constant(V), t.constant(T), t.constant(aq),
                                         t.constant(ak), t.constant(at), el));
  ASSERT_EQ(got.rows(), n);
  ASSERT_EQ(got.cols(), heads * dh);

  for (int dst = 0; dst < n; ++dst)
    for (int h = 0; h < heads; ++h) {
      std::vector<double> z;
      std::vector<std::size_t> idx;
      for (std::size_t e = 0; e < list.size(); ++e) {
        if (list[e][0] != static_cast<std::size_t>(dst)) continue;
        double x = 0.0;
        for (int c = 0; c < dh; ++c)
          x += aq(h, c) * Q(dst, h * dh + c) + ak(h, c) * K(static_cast<Eigen::Index>(list[e][1]), h * dh + c) +
               at(h, c) * T(static_cast<Eigen::Index>(list[e][2]), h * dh + c);
        z.push_back(0.2 * x + 0.8 * (std::log1p(std::exp(x)) - std::log(2.0)));
        idx.push_back(e);
      }
      double denom = 0.0;
      for (double v : z) denom += std::exp(v);
      for (int c = 0; c < dh; ++c) {
        double want = 0.0;
        for (std::size_t m = 0; m < idx.size(); ++m) {
          const auto& e = list[idx[m]];
          want += std::exp(z[m]) / denom *
                  (V(static_cast<Eigen::Index>(e[1]), h * dh + c) + T(static_cast<Eigen::Index>(e[2]), h * dh + c));
        }
        EXPECT_NEAR(got(dst, h * dh + c), want, 1e-12) << dst << " " << h << " " << c;
      }
    }
}

TEST(Scorer, PairLogitsMatchDirectEvaluation) {
  Rng rng(5);
  const Matrix A = random_matrix(rng, 4, 6), B = random_matrix(rng, 3, 6), w2 = random_matrix(rng, 6, 1), b2 = random_matrix(rng, 1, 1);
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 2}, {3, 0}, {1, 1}, {0, 2}};
  ad::Tape t;
  const Matrix z = t.value(t.pair_logits(t.constant(A), t.constant(B), t.constant(w2), t.constant(b2), pairs));
  ASSERT_EQ(z.rows(), 4);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double want = b2(0, 0);
    for (int c = 0; c < 6; ++c)
      want += w2(c, 0) * std::tanh(A(static_cast<Eigen::Index>(pairs[i].first), c) + B(static_cast<Eigen::Index>(pairs[i].second), c));
    EXPECT_NEAR(z(static_cast<Eigen::Index>(i), 0), want, 1e-12);
  }
}

TEST(Scorer, EquivariantUnderEntityReordering) {
  const auto& s = sample_with_candidates();
  const ModelParams p = init_params({}, 3);
  const Permuted q = permute(*s.upd);
  const Matching prior = coincidence_match(*s.orig, *s.upd, default_delta(*s.orig));
  Matching prior_q;
  for (const auto& m : prior.pairs()) prior_q.add(m.orig, mapped(q, m.upd), m.provenance);
  const auto cand = unmatched_candidates(*s.orig, *s.upd, prior);
  ASSERT_FALSE(cand.empty());
  std::vector<Candidate> cand_q;
  for (const auto& [o, u] : cand) cand_q.push_back({o, mapped(q, u)});

  const auto a = score_all(*s.orig, *s.upd, prior, cand, p);
  const auto b = score_all(*s.orig, q.graph, prior_q, cand_q, p);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(Scorer, EmptyAndDuplicateCandidates) {
  const auto& s = sample_with_candidates();
  const ModelParams p = init_params({}, 1);
  const Matching prior;
  EXPECT_TRUE(score_all(*s.orig, *s.upd, prior, {}, p).empty());
  const Candidate c{{Kind::Face, 0}, {Kind::Face, 1}};
  const auto out = score_all(*s.orig, *s.upd, prior, {c, {{Kind::Edge, 0}, {Kind::Edge, 0}}, c}, p);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0], out[2]);
  for (double v : out) {
    EXPECT_GE(v, ad::kProbClamp);
    EXPECT_LE(v, 1.0 - ad::kProbClamp);
  }
  EXPECT_EQ(out, score_all(*s.orig, *s.upd, prior, {c, {{Kind::Edge, 0}, {Kind::Edge, 0}}, c}, p));
}

TEST(Scorer, InvalidCandidates) {
  const auto& s = sample_with_candidates();
  const ModelParams p = zero_params();
  Matching prior;
  prior.add({Kind::Face, 0}, {Kind::Face, 0}, Provenance::Exact);
  EXPECT_THROW(score_all(*s.orig, *s.upd, prior, {{{Kind::Face, 1}, {Kind::Edge, 1}}}, p), InvalidCandidate);
  EXPECT_THROW(score_all(*s.orig, *s.upd, prior, {{{Kind::Face, 0}, {Kind::Face, 1}}}, p), InvalidCandidate);
  EXPECT_THROW(score_all(*s.orig, *s.upd, prior, {{{Kind::Face, 1}, {Kind::Face, 0}}}, p), InvalidCandidate);
  EXPECT_THROW(score_all(*s.orig, *s.upd, prior, {{{Kind::Vertex, 9999}, {Kind::Vertex, 1}}}, p), InvalidCandidate);
}

TEST(Scorer, FeatureWidthMismatchIsShapeError) {
  const auto& s = sample_with_candidates();
  const PairContext ctx = make_context(*s.orig, *s.upd);
  FeatureTable f = ctx.fo;
  f.faces.conservativeResize(Eigen::NoChange, feat::kWidth - 1);
  EXPECT_THROW(encode_values(ctx.to, f, zero_params()), ShapeError);
}

TEST(Loss, KnownValues) {
  EXPECT_NEAR(loss(1.0, 1.0, 2.0), 0.0, 1e-12);
  EXPECT_NEAR(loss(0.0, 0.0, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(loss(0.5, 0.0, 2.0), 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(loss(0.5, 1.0, 2.0), std::log(2.0), 1e-12);
  EXPECT_NEAR(loss(0.5, 0.0, 1.0), std::log(2.0), 1e-12);
  EXPECT_TRUE(std::isfinite(loss(0.0, 1.0, 2.0)));
}

TEST(Loss, OutOfRangeIsDomainError) {
  EXPECT_THROW(loss(1.5, 1.0, 2.0), DomainError);
  EXPECT_THROW(loss(-0.1, 0.0, 2.0), DomainError);
  EXPECT_THROW(loss(std::nan(""), 0.0, 2.0), DomainError);
}

TEST(Checkpoint, BitwiseRoundTrip) {
  const ModelParams p = init_params({}, 42);
  EXPECT_EQ(p.count(), 414977u);
  const std::string bytes = serialize_params(p);
  const ModelParams q = deserialize_params(bytes);
  EXPECT_TRUE(p == q);
  EXPECT_EQ(q.names, p.names);
  EXPECT_EQ(q.seed, 42u);
  EXPECT_EQ(serialize_params(q), bytes);
}

TEST(Checkpoint, CorruptionDetected) {
  const std::string bytes = serialize_params(init_params({}, 1));
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_params(flipped), CheckpointError);
  EXPECT_THROW(deserialize_params(bytes.substr(0, bytes.size() - 3)), CheckpointError);
  EXPECT_THROW(deserialize_params("NOTACKPT" + bytes.substr(8)), CheckpointError);
  EXPECT_THROW(deserialize_params(""), CheckpointError);
}

TEST(Checkpoint, DifferentSeedsDiffer) {
  EXPECT_FALSE(init_params({}, 1) == init_params({}, 2));
  EXPECT_TRUE(init_params({}, 1) == init_params({}, 1));
}
