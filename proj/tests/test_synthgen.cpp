#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "brepmatch/exact_match.hpp"
#include "brepmatch/synth/dataset.hpp"
#include "brepmatch/synth/edits.hpp"
#include "brepmatch/validate.hpp"
#include "test_util.hpp"

using namespace brepmatch;
using namespace brepmatch::synth;

namespace fs = std::filesystem;

namespace {

struct Counts {
  std::size_t f, e, v, l;
  bool operator==(const Counts&) const = default;
};

Counts counts(const BRepGraph& b) { return {b.faces.size(), b.edges.size(), b.vertices.size(), b.loops.size()}; }

std::ostream& operator<<(std::ostream& os, const Counts& c) { return os << c.f << '/' << c.e << '/' << c.v << '/' << c.l; }

SynthModel block40() {
  ModelSpec s;
  s.block.lo = Vec3(0, 0, 0);
  s.block.hi = Vec3(40, 30, 20);
  return emit(s, "blk");
}

Hole top_hole(bool through) {
  Hole h;
  h.host = 5;
  h.cu = 20;
  h.cv = 15;
  h.radius = 3.0;  // 0.1 x the narrower face width
  h.through = through;
  h.depth = 8.0;
  return h;
}

std::size_t count_kind(const std::vector<EntityRef>& v, Kind k) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [k](const EntityRef& r) { return r.kind == k; }));
}

void expect_consistent(const SynthModel& pre, const EditResult& r) {
  for (Kind k : kAllKinds) {
    std::size_t ident = 0;
    for (const auto& [post, before] : r.edit.identity) {
      if (post.kind != k) continue;
      ++ident;
      EXPECT_EQ(r.model.names(k)[post.index], pre.names(k)[before.index]);
    }
    EXPECT_EQ(ident + count_kind(r.edit.created, k), r.model.graph.count(k));
    EXPECT_EQ(ident + count_kind(r.edit.destroyed, k), pre.graph.count(k));
  }
  EXPECT_TRUE(validate(r.model.graph).empty());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Generator, PlainBlocks) {
  for (std::uint64_t seed : {4, 6, 9}) {
    const auto m = generate_base_model(seed);
    EXPECT_EQ(counts(m.graph), (Counts{6, 12, 8, 6})) << "seed " << seed;
  }
}

TEST(Generator, GoldenSeedSeven) { EXPECT_EQ(counts(generate_base_model(7).graph), (Counts{13, 26, 16, 16})); }

TEST(Generator, EveryBaseModelValidates) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto m = generate_base_model(seed);
    const auto v = validate(m.graph);
    EXPECT_TRUE(v.empty()) << "seed " << seed << ": " << (v.empty() ? "" : v.front());
    EXPECT_EQ(m.face_names.size(), m.graph.faces.size());
    EXPECT_TRUE(std::is_sorted(m.face_names.begin(), m.face_names.end()));
  }
}

TEST(Generator, Deterministic) {
  EXPECT_EQ(serialize_brep(generate_base_model(13).graph), serialize_brep(generate_base_model(13).graph));
}

TEST(Edits, ThroughHoleTopology) {
  const auto base = block40();
  const auto r = apply_hole(base, top_hole(true));
  expect_consistent(base, r);
  EXPECT_EQ(counts(r.model.graph), (Counts{7, 14, 8, 10}));
  EXPECT_TRUE(r.edit.destroyed.empty());
  for (const char* host : {"Rz+", "Rz-"}) {
    const auto& f = r.model.graph.faces[*r.model.find(Kind::Face, host)];
    ASSERT_EQ(f.loops.size(), 2u) << host;
    EXPECT_TRUE(r.model.graph.loops[f.loops[0]].outer);
    EXPECT_FALSE(r.model.graph.loops[f.loops[1]].outer);
  }
  EXPECT_EQ(r.model.graph.faces[*r.model.find(Kind::Face, "H1cyl")].geom.kind, GeomKind::Cylinder);
}

TEST(Edits, BlindHoleTopology) {
  const auto base = block40();
  const auto r = apply_hole(base, top_hole(false));
  expect_consistent(base, r);
  EXPECT_EQ(counts(r.model.graph), (Counts{8, 14, 8, 10}));
  EXPECT_EQ(count_kind(r.edit.created, Kind::Face), 2u);
  EXPECT_EQ(count_kind(r.edit.created, Kind::Edge), 2u);
  EXPECT_EQ(r.model.graph.faces[*r.model.find(Kind::Face, "Rz+")].loops.size(), 2u);
  EXPECT_EQ(r.model.graph.faces[*r.model.find(Kind::Face, "Rz-")].loops.size(), 1u);
}

TEST(Edits, ChamferTopology) {
  const auto base = block40();
  Bevel bv;
  bv.fa = 5;
  bv.fb = 1;
  bv.size = 2;
  const auto r = apply_bevel(base, bv);
  expect_consistent(base, r);
  EXPECT_EQ(count_kind(r.edit.destroyed, Kind::Face), 0u);
  EXPECT_EQ(count_kind(r.edit.destroyed, Kind::Edge), 1u);
  EXPECT_EQ(count_kind(r.edit.destroyed, Kind::Vertex), 2u);
  EXPECT_EQ(count_kind(r.edit.created, Kind::Face), 1u);
  EXPECT_EQ(count_kind(r.edit.created, Kind::Edge), 4u);
  EXPECT_EQ(count_kind(r.edit.created, Kind::Vertex), 4u);
  EXPECT_EQ(r.edit.kind, EditKind::Chamfer);
}

TEST(Edits, FaceMoveShiftsCentroidAlongNormal) {
  const auto base = block40();
  const double h = 20.0;
  const auto r = apply_face_move(base, "Rz+", 0.2 * h);
  expect_consistent(base, r);
  EXPECT_EQ(counts(r.model.graph), counts(base.graph));
  EXPECT_TRUE(r.edit.created.empty());
  const auto& before = base.graph.faces[*base.find(Kind::Face, "Rz+")].geom;
  const auto& after = r.model.graph.faces[*r.model.find(Kind::Face, "Rz+")].geom;
  EXPECT_LT((after.centroid - before.centroid - Vec3(0, 0, 0.2 * h)).norm(), 1e-9);
  EXPECT_NEAR(after.measure, before.measure, 1e-9);
}

TEST(Edits, FaceMoveCollapseRejected) {
  const auto base = block40();
  EXPECT_THROW(apply_face_move(base, "Rz+", -20.0), RejectedEdit);
  EXPECT_THROW(apply_face_move(base, "nope", 1.0), RejectedEdit);
}

TEST(Edits, UnitScaleIsIdentity) {
  const auto holed = apply_hole(block40(), top_hole(true)).model;
  const auto r = apply_face_scale(holed, "H1", 1.0);
  EXPECT_TRUE(structurally_equal(r.model.graph, holed.graph));
  EXPECT_TRUE(r.edit.created.empty());
  EXPECT_TRUE(r.edit.destroyed.empty());
  EXPECT_EQ(name_matching(holed, r.model).size(), primary_count(holed.graph));
  EXPECT_THROW(apply_face_scale(holed, "H1", 0.0), RejectedEdit);
  EXPECT_THROW(apply_face_scale(holed, "C9", 1.1), RejectedEdit);
}

TEST(Edits, RandomEditsStayValidAndTracked) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto base = generate_base_model(seed);
    try {
      expect_consistent(base, apply_constructive(base, seed));
    } catch (const NoEligibleTarget&) {
    }
    try {
      expect_consistent(base, apply_deformation(base, seed));
    } catch (const RejectedEdit&) {
    }
  }
}

TEST(Dataset, SplitByModel) {
  const Dataset ds = generate_dataset(10, 3, Mix::Complete, 5);
  EXPECT_EQ(ds.split.train.size(), 8u);
  EXPECT_EQ(ds.split.val.size(), 1u);
  EXPECT_EQ(ds.split.test.size(), 1u);
  EXPECT_GE(ds.samples.size(), 30u);
  for (const auto& s : ds.samples) {
    EXPECT_TRUE(check_matching(s.truth, *s.orig, *s.upd).empty()) << s.upd_id;
    EXPECT_EQ(s.upd->model_id, s.upd_id);
  }
  EXPECT_EQ(ds.subset(ds.split.train).size() + ds.subset(ds.split.val).size() + ds.subset(ds.split.test).size(),
            ds.samples.size());
  EXPECT_THROW(generate_dataset(9, 1, Mix::Complete, 0), ValidationError);
}

TEST(Dataset, SavedBytesAreReproducible) {
  const fs::path root = fs::temp_directory_path() / "brepmatch_synthgen_test";
  fs::remove_all(root);
  save_dataset(generate_dataset(10, 1, Mix::Complete, 8), root / "a");
  save_dataset(generate_dataset(10, 1, Mix::Complete, 8), root / "b");
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(root / "b" / fs::relative(e.path(), root / "a"))) << e.path();
  }
  EXPECT_GT(files, 20u);
  const Dataset back = load_dataset(root / "a");
  const Dataset orig = generate_dataset(10, 1, Mix::Complete, 8);
  ASSERT_EQ(back.samples.size(), orig.samples.size());
  for (std::size_t i = 0; i < back.samples.size(); ++i) {
    EXPECT_TRUE(structurally_equal(*back.samples[i].upd, *orig.samples[i].upd));
    EXPECT_TRUE(back.samples[i].truth.same_pairs(orig.samples[i].truth));
  }
  fs::remove_all(root);
}

// Constructive edits leave untouched entities geometrically identical, so
// coincidence recovers most of the truth and never contradicts it.
TEST(Dataset, ConstructiveVariantsCoincideWhereUntouched) {
  const Dataset ds = generate_dataset(10, 2, Mix::ConstructOnly, 21);
  std::size_t truth = 0, found = 0;
  for (const auto& s : ds.samples) {
    const Matching c = coincidence_match(*s.orig, *s.upd, default_delta(*s.orig));
    for (const auto& p : c.pairs()) ASSERT_EQ(s.truth.upd_of(p.orig), p.upd) << s.upd_id;
    truth += s.truth.size();
    found += c.size();
  }
  EXPECT_GT(static_cast<double>(found), 0.6 * static_cast<double>(truth));
}
