#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "brepmatch/brep.hpp"

namespace brepmatch {

enum class Provenance : std::uint8_t { Exact, Overlap, Propagated, Learned, GroundTruth };

inline std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Exact: return "exact";
    case Provenance::Overlap: return "overlap";
    case Provenance::Propagated: return "propagated";
    case Provenance::Learned: return "learned";
    case Provenance::GroundTruth: return "ground_truth";
  }
  return "?";
}

inline Provenance provenance_from_name(std::string_view s) {
  if (s == "exact") return Provenance::Exact;
  if (s == "overlap") return Provenance::Overlap;
  if (s == "propagated") return Provenance::Propagated;
  if (s == "learned") return Provenance::Learned;
  if (s == "ground_truth") return Provenance::GroundTruth;
  throw SchemaError("unknown provenance '" + std::string(s) + "'");
}

struct MatchPair {
  EntityRef orig;
  EntityRef upd;
  Provenance provenance = Provenance::Exact;
  double score = 1.0;  // meaningful for Learned only
  std::size_t order = 0;

  bool operator==(const MatchPair&) const = default;
};

// One-to-one, kind-consistent set of entity pairs between an original and an
// updated B-rep. Pairs keep their insertion order.
class Matching {
public:
  const std::vector<MatchPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  bool has_orig(EntityRef r) const { return by_orig_.count(r) != 0; }
  bool has_upd(EntityRef r) const { return by_upd_.count(r) != 0; }

  std::optional<EntityRef> upd_of(EntityRef orig) const {
    auto it = by_orig_.find(orig);
    if (it == by_orig_.end()) return std::nullopt;
    return pairs_[it->second].upd;
  }
  std::optional<EntityRef> orig_of(EntityRef upd) const {
    auto it = by_upd_.find(upd);
    if (it == by_upd_.end()) return std::nullopt;
    return pairs_[it->second].orig;
  }
  const MatchPair* pair_of_upd(EntityRef upd) const {
    auto it = by_upd_.find(upd);
    return it == by_upd_.end() ? nullptr : &pairs_[it->second];
  }

  // Appends a pair. Throws ValidationError if it would break kind consistency,
  // one-to-one-ness, or the (0,1] range of learned scores.
  void add(EntityRef orig, EntityRef upd, Provenance prov, double score = 1.0) {
    if (orig.kind != upd.kind) throw ValidationError("pair mixes entity kinds");
    if (has_orig(orig)) throw ValidationError("original entity already matched");
    if (has_upd(upd)) throw ValidationError("updated entity already matched");
    if (prov == Provenance::Learned && !(score > 0.0 && score <= 1.0))
      throw ValidationError("learned score outside (0,1]");
    by_orig_[orig] = pairs_.size();
    by_upd_[upd] = pairs_.size();
    pairs_.push_back({orig, upd, prov, prov == Provenance::Learned ? score : 1.0, pairs_.size()});
  }

  std::size_t count(Kind k) const {
    std::size_t n = 0;
    for (const auto& p : pairs_) n += p.orig.kind == k;
    return n;
  }

  // Pairs sorted by original reference.
  std::vector<MatchPair> sorted_pairs() const {
    std::vector<MatchPair> v = pairs_;
    std::sort(v.begin(), v.end(), [](const MatchPair& a, const MatchPair& b) { return a.orig < b.orig; });
    return v;
  }

  // Set equality of (orig, upd) pairs, ignoring provenance and order.
  bool same_pairs(const Matching& other) const {
    if (size() != other.size()) return false;
    for (const auto& p : pairs_) {
      auto u = other.upd_of(p.orig);
      if (!u || *u != p.upd) return false;
    }
    return true;
  }

  bool operator==(const Matching& other) const { return pairs_ == other.pairs_; }

private:
  std::vector<MatchPair> pairs_;
  std::map<EntityRef, std::size_t> by_orig_;
  std::map<EntityRef, std::size_t> by_upd_;
};

// Checks the Matching invariants against the two models it refers to.
inline std::vector<std::string> check_matching(const Matching& m, const BRepGraph& bo, const BRepGraph& bu) {
  std::vector<std::string> out;
  std::map<EntityRef, int> seen_o, seen_u;
  for (const auto& p : m.pairs()) {
    if (p.orig.kind != p.upd.kind) out.push_back("kind mismatch");
    if (p.orig.index >= bo.count(p.orig.kind)) out.push_back("orig index out of range");
    if (p.upd.index >= bu.count(p.upd.kind)) out.push_back("upd index out of range");
    if (++seen_o[p.orig] > 1) out.push_back("orig matched twice");
    if (++seen_u[p.upd] > 1) out.push_back("upd matched twice");
    if (p.provenance == Provenance::Learned && !(p.score > 0.0 && p.score <= 1.0))
      out.push_back("learned score out of range");
  }
  return out;
}

}  // namespace brepmatch
