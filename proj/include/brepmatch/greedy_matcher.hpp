#pragma once

#include <optional>
#include <vector>

#include "brepmatch/exact_match.hpp"
#include "brepmatch/match_io.hpp"
#include "brepmatch/overlap_match.hpp"
#include "brepmatch/scorer.hpp"

namespace brepmatch {

inline constexpr double kDefaultThreshold = 0.7;
inline constexpr double kOverlapFraction = 0.8;

struct MatchOptions {
  double threshold = kDefaultThreshold;
  std::optional<double> delta;  // default: default_delta(original)
  bool overlap_prior = false;   // add overlap matches to the bootstrap
  int pairs_per_rescore = 1;    // > 1 trades fidelity for speed
  std::optional<std::size_t> max_iterations;
};

struct MatchResult {
  Matching matching;
  std::vector<TraceStep> trace;
};

inline Matching bootstrap_matching(const BRepGraph& bo, const BRepGraph& bu, double delta, bool with_overlap) {
  Matching m = coincidence_match(bo, bu, delta);
  if (with_overlap) m = overlap_match(bo, bu, m, kOverlapFraction, delta);
  return m;
}

// Bootstraps with coincident pairs, then repeatedly adds the best-scoring
// unmatched same-kind pair until the best score falls below the threshold.
// Ties go to the lowest (kind, orig, upd). Without params only the bootstrap
// is returned.
inline MatchResult match(const BRepGraph& bo, const BRepGraph& bu, const ModelParams* params, const MatchOptions& opt = {}) {
  if (!(opt.threshold > 0.0 && opt.threshold <= 1.0)) throw InvalidTolerance("threshold must lie in (0, 1]");
  if (opt.pairs_per_rescore < 1) throw ValidationError("pairs_per_rescore must be positive");
  const double delta = opt.delta ? *opt.delta : default_delta(bo);
  MatchResult r;
  r.matching = bootstrap_matching(bo, bu, delta, opt.overlap_prior);
  if (!params) return r;
  const PairContext ctx = make_context(bo, bu);
  const Embeddings eo = encode_values(ctx.to, ctx.fo, *params);
  const Embeddings eu = encode_values(ctx.tu, ctx.fu, *params);
  std::size_t iter = 0;
  while (!opt.max_iterations || iter < *opt.max_iterations) {
    const std::vector<Candidate> cand = unmatched_candidates(bo, bu, r.matching);
    if (cand.empty()) break;
    const std::vector<double> scores = score_all(ctx, eo, eu, r.matching, cand, *params);
    std::vector<std::size_t> order;
    if (opt.pairs_per_rescore == 1) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
      order.push_back(best);
    } else {
      order.resize(cand.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    }
    int added = 0;
    for (std::size_t i : order) {
      if (scores[i] < opt.threshold || added == opt.pairs_per_rescore) break;
      const auto& [o, u] = cand[i];
      if (r.matching.has_orig(o) || r.matching.has_upd(u)) continue;
      r.matching.add(o, u, Provenance::Learned, scores[i]);
      r.trace.push_back({iter++, o, u, scores[i]});
      ++added;
      if (opt.max_iterations && iter >= *opt.max_iterations) break;
    }
    if (added == 0) break;
  }
  return r;
}

// Whether the trace at t_high is a prefix of the trace at t_low.
inline bool is_trace_prefix(const std::vector<TraceStep>& high, const std::vector<TraceStep>& low) {
  return high.size() <= low.size() && std::equal(high.begin(), high.end(), low.begin());
}

inline bool threshold_prefix(const BRepGraph& bo, const BRepGraph& bu, const ModelParams& params, double t_low, double t_high) {
  if (t_low > t_high) throw ValidationError("t_low must not exceed t_high");
  MatchOptions lo, hi;
  lo.threshold = t_low;
  hi.threshold = t_high;
  return is_trace_prefix(match(bo, bu, &params, hi).trace, match(bo, bu, &params, lo).trace);
}

// The matching a run at `threshold` would have produced, recovered from the
// run at a lower threshold by truncating its trace.
inline Matching truncate_to_threshold(const Matching& full, double threshold) {
  Matching m;
  for (const auto& p : full.pairs()) {
    if (p.provenance == Provenance::Learned && p.score < threshold) break;
    m.add(p.orig, p.upd, p.provenance, p.score);
  }
  return m;
}

}  // namespace brepmatch
