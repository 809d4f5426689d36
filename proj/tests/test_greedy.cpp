#include <gtest/gtest.h>

#include "brepmatch/greedy_matcher.hpp"
#include "brepmatch/synth/edits.hpp"
#include "test_util.hpp"

using namespace brepmatch;

namespace {

ModelParams tiny_params(std::uint64_t seed) {
  ModelConfig c;
  c.width = 16;
  c.encoder_layers = 2;
  c.gat_layers = 2;
  c.heads = 4;
  c.mlp_hidden = 16;
  return init_params(c, seed);
}

std::vector<const PairSample*> small_samples(std::size_t n) {
  std::vector<const PairSample*> out;
  for (const auto& s : small_dataset().samples)
    if (out.size() < n && primary_count(*s.orig) <= 40 && primary_count(*s.upd) <= 40) out.push_back(&s);
  return out;
}

MatchOptions at(double threshold) {
  MatchOptions o;
  o.threshold = threshold;
  return o;
}

}  // namespace

TEST(Greedy, IdenticalModelsNeedNoLearnedSteps) {
  const auto m = synth::generate_base_model(4).graph;
  const ModelParams p = tiny_params(1);
  const auto r = match(m, m, &p, at(0.01));
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.matching.size(), primary_count(m));
}

TEST(Greedy, ThresholdOneKeepsOnlyTheBootstrap) {
  const ModelParams p = tiny_params(2);
  for (const PairSample* s : small_samples(4)) {
    const auto r = match(*s->orig, *s->upd, &p, at(1.0));
    EXPECT_TRUE(r.trace.empty());
    EXPECT_TRUE(r.matching == coincidence_match(*s->orig, *s->upd, default_delta(*s->orig)));
  }
}

TEST(Greedy, WithoutParamsReturnsBootstrap) {
  const PairSample& s = *small_samples(1).front();
  const double d = default_delta(*s.orig);
  EXPECT_TRUE(match(*s.orig, *s.upd, nullptr).matching == coincidence_match(*s.orig, *s.upd, d));
  MatchOptions o;
  o.overlap_prior = true;
  EXPECT_TRUE(match(*s.orig, *s.upd, nullptr, o).matching == bootstrap_matching(*s.orig, *s.upd, d, true));
}

TEST(Greedy, LearnedPairsRespectThresholdAndOrder) {
  const ModelParams p = tiny_params(3);
  for (const PairSample* s : small_samples(3)) {
    const auto r = match(*s->orig, *s->upd, &p, at(0.45));
    EXPECT_TRUE(check_matching(r.matching, *s->orig, *s->upd).empty());
    std::size_t learned = 0;
    for (const auto& m : r.matching.pairs()) {
      if (m.provenance != Provenance::Learned) {
        EXPECT_EQ(learned, 0u) << "bootstrap pairs come first";
        continue;
      }
      ASSERT_LT(learned, r.trace.size());
      const TraceStep& t = r.trace[learned];
      EXPECT_EQ(t.iter, learned);
      EXPECT_EQ(t.orig, m.orig);
      EXPECT_EQ(t.upd, m.upd);
      EXPECT_EQ(t.score, m.score);
      EXPECT_GE(m.score, 0.45);
      ++learned;
    }
    EXPECT_EQ(learned, r.trace.size());
  }
}

TEST(Greedy, HigherThresholdTraceIsPrefix) {
  const ModelParams p = tiny_params(4);
  std::size_t steps = 0;
  for (const PairSample* s : small_samples(3)) {
    const auto low = match(*s->orig, *s->upd, &p, at(0.4));
    steps += low.trace.size();
    for (double t : {0.45, 0.5, 0.55, 0.6}) {
      const auto high = match(*s->orig, *s->upd, &p, at(t));
      EXPECT_TRUE(is_trace_prefix(high.trace, low.trace)) << t;
      EXPECT_TRUE(truncate_to_threshold(low.matching, t) == high.matching) << t;
    }
    EXPECT_TRUE(threshold_prefix(*s->orig, *s->upd, p, 0.4, 0.5));
  }
  EXPECT_GT(steps, 0u);
  const PairSample& s = *small_samples(1).front();
  EXPECT_THROW(threshold_prefix(*s.orig, *s.upd, p, 0.6, 0.5), ValidationError);
}

TEST(Greedy, Deterministic) {
  const ModelParams p = tiny_params(5);
  const PairSample& s = *small_samples(1).front();
  const auto a = match(*s.orig, *s.upd, &p, at(0.4));
  const auto b = match(*s.orig, *s.upd, &p, at(0.4));
  EXPECT_TRUE(a.matching == b.matching);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(Greedy, IterationCapAndBatchedRescoring) {
  const ModelParams p = tiny_params(6);
  const PairSample& s = *small_samples(1).front();
  MatchOptions o = at(0.3);
  o.max_iterations = 2;
  EXPECT_LE(match(*s.orig, *s.upd, &p, o).trace.size(), 2u);
  MatchOptions b = at(0.3);
  b.pairs_per_rescore = 4;
  const auto r = match(*s.orig, *s.upd, &p, b);
  EXPECT_TRUE(check_matching(r.matching, *s.orig, *s.upd).empty());
  for (const auto& t : r.trace) EXPECT_GE(t.score, 0.3);
}

TEST(Greedy, BadOptionsRejected) {
  const PairSample& s = *small_samples(1).front();
  EXPECT_THROW(match(*s.orig, *s.upd, nullptr, at(0.0)), InvalidTolerance);
  EXPECT_THROW(match(*s.orig, *s.upd, nullptr, at(1.5)), InvalidTolerance);
  MatchOptions o;
  o.pairs_per_rescore = 0;
  EXPECT_THROW(match(*s.orig, *s.upd, nullptr, o), ValidationError);
}
