#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "brepmatch/brep_io.hpp"
#include "brepmatch/features.hpp"
#include "brepmatch/rng.hpp"
#include "brepmatch/synth/edits.hpp"
#include "test_util.hpp"

using namespace brepmatch;

namespace {

json cube_json() {
  std::ifstream in(test_data("unit_cube.json"));
  return json::parse(in);
}

bool has_violation(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(BrepLoad, UnitCubeCounts) {
  const BRepGraph b = load_brep_file(test_data("unit_cube.json"));
  EXPECT_EQ(b.faces.size(), 6u);
  EXPECT_EQ(b.edges.size(), 12u);
  EXPECT_EQ(b.vertices.size(), 8u);
  EXPECT_EQ(b.loops.size(), 6u);
  EXPECT_TRUE(validate(b).empty());
}

TEST(BrepLoad, DanglingLoopEdgeNamesTheLoop) {
  json j = cube_json();
  j["loops"][2]["edges"][0]["edge"] = 99;
  try {
    load_brep_string(j.dump());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("loops[2]"), std::string::npos) << e.what();
  }
}

TEST(BrepLoad, MalformedJsonIsParseError) { EXPECT_THROW(load_brep_string("{\"model_id\": "), ParseError); }

TEST(BrepLoad, UnknownOrMissingFieldIsSchemaError) {
  json j = cube_json();
  j["colour"] = "red";
  EXPECT_THROW(load_brep_string(j.dump()), SchemaError);
  json k = cube_json();
  k["faces"][0].erase("weights");
  EXPECT_THROW(load_brep_string(k.dump()), SchemaError);
}

TEST(BrepLoad, GeneratedModelRoundTrips) {
  const auto m = synth::generate_base_model(7, "seed7");
  const BRepGraph back = load_brep_string(serialize_brep(m.graph));
  EXPECT_TRUE(structurally_equal(back, m.graph));
  EXPECT_EQ(serialize_brep(back), serialize_brep(m.graph));
}

TEST(BrepLoad, RoundTripOverManySeeds) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto m = synth::generate_base_model(seed);
    const BRepGraph back = load_brep_string(serialize_brep(m.graph));
    ASSERT_TRUE(structurally_equal(back, m.graph)) << "seed " << seed;
    ASSERT_EQ(serialize_brep(back), serialize_brep(m.graph)) << "seed " << seed;
  }
}

TEST(Validate, CubeIsValid) { EXPECT_TRUE(validate(load_brep_file(test_data("unit_cube.json"))).empty()); }

TEST(Validate, ClearedOuterFlag) {
  BRepGraph b = load_brep_file(test_data("unit_cube.json"));
  b.loops[b.faces[3].loops[0]].outer = false;
  const auto v = validate(b);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("no outer loop"), std::string::npos);
}

// Deleting any single edge from any loop cycle breaks closure.
TEST(Validate, CorruptionFuzzerDetectsOpenLoops) {
  Rng rng(1234);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    BRepGraph b = synth::generate_base_model(seed).graph;
    std::vector<std::size_t> candidates;
    for (std::size_t l = 0; l < b.loops.size(); ++l)
      if (b.loops[l].edges.size() >= 3) candidates.push_back(l);
    ASSERT_FALSE(candidates.empty());
    const std::size_t l = candidates[rng.index(candidates.size())];
    auto& edges = b.loops[l].edges;
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(rng.index(edges.size())));
    b.finalize();
    EXPECT_TRUE(has_violation(validate(b), "non-closed loop")) << "seed " << seed << " loop " << l;
  }
}

TEST(Validate, SampleOutsideBbox) {
  BRepGraph b = load_brep_file(test_data("unit_cube.json"));
  b.faces[0].geom.samples[0] = Vec3(5, 5, 5);
  b.finalize();
  EXPECT_TRUE(has_violation(validate(b), "outside model bbox"));
}

TEST(Features, CubeOwnFrame) {
  const BRepGraph b = load_brep_file(test_data("unit_cube.json"));
  const Frame frame = frame_of(b);
  const auto t = extract_features(b, frame);
  ASSERT_EQ(t.faces.rows(), 6);
  ASSERT_EQ(t.faces.cols(), feat::kWidth);
  ASSERT_EQ(t.loops.cols(), feat::kLoopWidth);
  const double d = std::sqrt(3.0);
  for (Eigen::Index f = 0; f < 6; ++f) {
    // area 1 -> log1p(1 / d^2), identical for all faces
    EXPECT_NEAR(t.faces(f, feat::kMeasure), std::log1p(1.0 / (d * d)), 1e-12);
    int half = 0, zero = 0;
    for (int k = 0; k < 3; ++k) {
      const double c = t.faces(f, feat::kCentroid + k);
      if (std::abs(std::abs(c) - 0.5 / d) < 1e-12) ++half;
      if (std::abs(c) < 1e-12) ++zero;
    }
    EXPECT_EQ(half, 1);
    EXPECT_EQ(zero, 2);
  }
  for (Eigen::Index v = 0; v < t.vertices.rows(); ++v) EXPECT_EQ(t.vertices(v, feat::kMeasure), 0.0);
  EXPECT_TRUE(t.faces.allFinite() && t.edges.allFinite() && t.vertices.allFinite() && t.loops.allFinite());
}

TEST(Features, DegenerateFrameThrows) {
  const BRepGraph b = load_brep_file(test_data("unit_cube.json"));
  EXPECT_THROW(extract_features(b, Frame{Vec3::Zero(), 0.0}), DegenerateFrame);
}

TEST(Features, DeterministicAndTranslationInvariant) {
  const auto m = synth::generate_base_model(3).graph;
  const auto a = extract_features(m, frame_of(m));
  const auto a2 = extract_features(m, frame_of(m));
  EXPECT_EQ(a.faces, a2.faces);
  EXPECT_EQ(a.edges, a2.edges);

  const Vec3 off(123.25, -40.5, 7.0);
  const BRepGraph moved = translated(m, off);
  const auto b = extract_features(moved, frame_of(moved));
  EXPECT_LT((a.faces - b.faces).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((a.edges - b.edges).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((a.vertices - b.vertices).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(a.loops, b.loops);
}

TEST(Features, SignatureInvariantsOnGeneratedModels) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = synth::generate_base_model(seed).graph;
    for (const auto& f : b.faces) {
      double w = 0.0;
      Vec3 c = Vec3::Zero();
      for (std::size_t i = 0; i < f.geom.samples.size(); ++i) {
        ASSERT_GT(f.geom.weights[i], 0.0);
        w += f.geom.weights[i];
        c += f.geom.weights[i] * f.geom.samples[i];
      }
      EXPECT_NEAR(w, f.geom.measure, 1e-9 * std::max(1.0, w));
      EXPECT_LT((c / w - f.geom.centroid).norm(), 1e-9 * std::max(1.0, b.diagonal()));
      EXPECT_NEAR(param_vec(f.geom.params, 3).norm(), 1.0, 1e-9);
    }
  }
}
