#include <gtest/gtest.h>

#include "brepmatch/adjacency_prop.hpp"
#include "brepmatch/exact_match.hpp"
#include "brepmatch/harness.hpp"
#include "brepmatch/overlap_match.hpp"
#include "brepmatch/synth/edits.hpp"
#include "test_util.hpp"

using namespace brepmatch;
using namespace brepmatch::synth;

namespace {

SynthModel block(const Vec3& lo, const Vec3& hi, const std::string& id = "blk") {
  ModelSpec s;
  s.block.lo = lo;
  s.block.hi = hi;
  return emit(s, id);
}

SynthModel block40() { return block(Vec3(0, 0, 0), Vec3(40, 30, 20)); }

Hole centre_hole(double radius, bool through) {
  Hole h;
  h.host = 5;
  h.cu = 20;
  h.cv = 15;
  h.radius = radius;
  h.through = through;
  h.depth = through ? 0.0 : 8.0;
  return h;
}

const GeometrySignature& face(const SynthModel& m, const std::string& name) { return m.graph.faces[*m.find(Kind::Face, name)].geom; }

Matching identity_faces(std::size_t n) {
  Matching m;
  for (std::size_t i = 0; i < n; ++i) m.add({Kind::Face, i}, {Kind::Face, i}, Provenance::Exact);
  return m;
}

std::size_t disagreements(const Matching& pred, const Matching& truth) {
  std::size_t n = 0;
  for (const auto& p : pred.pairs()) {
    const auto u = truth.upd_of(p.orig);
    n += !u || *u != p.upd;
  }
  return n;
}

}  // namespace

TEST(Coincidence, IdenticalModelsMatchEverything) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto b = generate_base_model(seed).graph;
    const Matching m = coincidence_match(b, b, default_delta(b));
    EXPECT_EQ(m.size(), primary_count(b)) << "seed " << seed;
    for (const auto& p : m.pairs()) {
      EXPECT_EQ(p.orig, p.upd);
      EXPECT_EQ(p.provenance, Provenance::Exact);
    }
    EXPECT_TRUE(check_matching(m, b, b).empty());
  }
}

TEST(Coincidence, FarTranslationMatchesNothing) {
  const auto b = generate_base_model(2).graph;
  const double delta = default_delta(b);
  EXPECT_TRUE(coincidence_match(b, translated(b, Vec3(1000 * delta, 0, 0)), delta).empty());
}

TEST(Coincidence, BlindHoleLeavesOnlyHostUnmatched) {
  const auto base = block40();
  const auto edited = apply_hole(base, centre_hole(3.0, false)).model;
  const Matching truth = name_matching(base, edited);
  const Matching m = coincidence_match(base.graph, edited.graph, default_delta(base.graph));
  EXPECT_EQ(m.size(), truth.size() - 1);
  EXPECT_EQ(disagreements(m, truth), 0u);
  EXPECT_FALSE(m.has_orig({Kind::Face, *base.find(Kind::Face, "Rz+")}));
}

TEST(Coincidence, GeometryCoincidentCases) {
  const auto base = block40();
  const double delta = default_delta(base.graph);
  const auto& top = face(base, "Rz+");
  EXPECT_TRUE(geometry_coincident(top, top, delta));

  GeometrySignature flipped = top;
  flipped.params = flipped_params(top);
  EXPECT_TRUE(geometry_coincident(top, flipped, delta));
  EXPECT_TRUE(geometry_coincident(flipped, top, delta));

  const auto h1 = apply_hole(base, centre_hole(3.0, true)).model;
  const auto h2 = apply_hole(base, centre_hole(3.3, true)).model;
  const auto& c1 = face(h1, "H1cyl");
  const auto& c2 = face(h2, "H1cyl");
  EXPECT_FALSE(geometry_coincident(c1, c2, delta));
  EXPECT_FALSE(geometry_coincident(c2, c1, delta));
  EXPECT_FALSE(geometry_coincident(top, face(base, "Rz-"), delta));
}

TEST(Coincidence, NoFalsePositivesOnTrackedVariants) {
  for (const auto& s : small_dataset().samples) {
    const double delta = default_delta(*s.orig);
    const Matching c = coincidence_match(*s.orig, *s.upd, delta);
    EXPECT_EQ(disagreements(c, s.truth), 0u) << s.upd_id;
    const Matching o = overlap_match(*s.orig, *s.upd, c, kOverlapFraction, delta);
    EXPECT_EQ(disagreements(o, s.truth), 0u) << s.upd_id;
    EXPECT_TRUE(check_matching(o, *s.orig, *s.upd).empty());
  }
}

TEST(Overlap, SmallHoleMatchedLargeBossNot) {
  const auto base = block40();
  const double delta = default_delta(base.graph);
  const std::size_t top = *base.find(Kind::Face, "Rz+");

  const auto holed = apply_hole(base, centre_hole(3.0, true)).model;
  const Matching c1 = coincidence_match(base.graph, holed.graph, delta);
  const Matching o1 = overlap_match(base.graph, holed.graph, c1, kOverlapFraction, delta);
  ASSERT_TRUE(o1.has_orig({Kind::Face, top}));
  EXPECT_EQ(*o1.upd_of({Kind::Face, top}), (EntityRef{Kind::Face, *holed.find(Kind::Face, "Rz+")}));
  EXPECT_EQ(o1.pair_of_upd(*o1.upd_of({Kind::Face, top}))->provenance, Provenance::Overlap);

  RectBoss r;
  r.host = 5;
  r.lo[0] = 1;
  r.hi[0] = 21;
  r.lo[1] = 0.5;
  r.hi[1] = 29.5;
  r.height = 5;
  const auto bossed = apply_rect_boss(base, r).model;
  const double est = estimate_overlap(face(base, "Rz+"), face(bossed, "Rz+"));
  EXPECT_LT(est, kOverlapFraction);
  const Matching c2 = coincidence_match(base.graph, bossed.graph, delta);
  EXPECT_FALSE(overlap_match(base.graph, bossed.graph, c2, kOverlapFraction, delta).has_orig({Kind::Face, top}));
}

TEST(Overlap, EstimateBounds) {
  const auto a = block(Vec3(0, 0, 0), Vec3(8, 8, 8));
  const auto& ta = face(a, "Rz+");
  EXPECT_DOUBLE_EQ(estimate_overlap(ta, ta), 1.0);
  EXPECT_EQ(estimate_overlap(ta, face(a, "Rz-")), 0.0);

  const auto b = block(Vec3(4, 0, 0), Vec3(12, 8, 8));
  const double half = estimate_overlap(ta, face(b, "Rz+"));
  EXPECT_NEAR(half, 0.5, 0.13);
  EXPECT_DOUBLE_EQ(half, estimate_overlap(face(b, "Rz+"), ta));
}

TEST(Overlap, RemovingSamplesNeverIncreasesEstimate) {
  const auto a = block(Vec3(0, 0, 0), Vec3(8, 8, 8));
  const auto b = block(Vec3(2, 1, 0), Vec3(10, 9, 8));
  const auto& ta = face(a, "Rz+");
  GeometrySignature tb = face(b, "Rz+");
  double prev = estimate_overlap(ta, tb);
  while (tb.samples.size() > 1) {
    tb.samples.pop_back();
    tb.weights.pop_back();
    const double e = estimate_overlap(ta, tb);
    ASSERT_LE(e, prev + 1e-12);
    prev = e;
  }
}

TEST(Propagation, FiveMatchedCubeFacesCascade) {
  const BRepGraph cube = load_brep_file(test_data("unit_cube.json"));
  const Matching m = propagate(cube, cube, identity_faces(5), default_delta(cube));
  EXPECT_EQ(m.size(), primary_count(cube));
  for (const auto& p : m.pairs()) EXPECT_EQ(p.orig, p.upd);
  EXPECT_EQ(m.pairs().back().provenance, Provenance::Propagated);
}

TEST(Propagation, EmptyInitialMatchingAddsNothing) {
  const BRepGraph cube = load_brep_file(test_data("unit_cube.json"));
  EXPECT_TRUE(propagate(cube, cube, Matching{}, default_delta(cube)).empty());
}

TEST(Propagation, ChamferAndFilletVariantsStayCorrect) {
  const auto base = block40();
  const double delta = default_delta(base.graph);
  for (auto style : {BevelStyle::Chamfer, BevelStyle::FilletLike}) {
    Bevel bv;
    bv.fa = 5;
    bv.fb = 1;
    bv.size = 2;
    bv.style = style;
    const auto edited = apply_bevel(base, bv).model;
    const Matching truth = name_matching(base, edited);
    const Matching init = bootstrap_matching(base.graph, edited.graph, delta, true);
    const Matching m = propagate(base.graph, edited.graph, init, delta);
    EXPECT_EQ(disagreements(m, truth), 0u);
    EXPECT_TRUE(m.same_pairs(truth));
  }
}

TEST(Propagation, ExtendsWithoutChangingInitialPairs) {
  for (const auto& s : small_dataset().samples) {
    const double delta = default_delta(*s.orig);
    const Matching init = bootstrap_matching(*s.orig, *s.upd, delta, true);
    const Matching m = propagate(*s.orig, *s.upd, init, delta);
    ASSERT_GE(m.size(), init.size());
    for (std::size_t i = 0; i < init.size(); ++i) ASSERT_EQ(m.pairs()[i], init.pairs()[i]);
    EXPECT_TRUE(check_matching(m, *s.orig, *s.upd).empty());
  }
}
