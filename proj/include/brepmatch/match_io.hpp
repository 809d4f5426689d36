#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "brepmatch/brep_io.hpp"
#include "brepmatch/matching.hpp"

namespace brepmatch {

struct TraceStep {
  std::size_t iter = 0;
  EntityRef orig;
  EntityRef upd;
  double score = 0.0;

  bool operator==(const TraceStep&) const = default;
};

// Serialized form of a matcher run (or a ground-truth matching).
struct MatchRecord {
  std::string orig_model;
  std::string upd_model;
  std::optional<double> threshold;
  Matching matching;
  std::vector<TraceStep> trace;
};

inline json match_record_to_json(const MatchRecord& r) {
  json j;
  j["orig_model"] = r.orig_model;
  j["upd_model"] = r.upd_model;
  j["threshold"] = r.threshold ? json(*r.threshold) : json(nullptr);
  json pairs = json::array();
  for (const auto& p : r.matching.pairs()) {
    json jp = {{"kind", std::string(kind_name(p.orig.kind))},
               {"orig", p.orig.index},
               {"upd", p.upd.index},
               {"provenance", std::string(provenance_name(p.provenance))},
               {"order", p.order}};
    if (p.provenance == Provenance::Learned) jp["score"] = p.score;
    pairs.push_back(std::move(jp));
  }
  j["pairs"] = pairs;
  json trace = json::array();
  for (const auto& t : r.trace)
    trace.push_back({{"iter", t.iter},
                     {"kind", std::string(kind_name(t.orig.kind))},
                     {"orig", t.orig.index},
                     {"upd", t.upd.index},
                     {"score", t.score}});
  j["trace"] = trace;
  return j;
}

inline MatchRecord match_record_from_json(const json& j) {
  using namespace io_detail;
  require_object(j, "$", {"orig_model", "upd_model", "threshold", "pairs", "trace"});
  MatchRecord r;
  if (!j["orig_model"].is_string() || !j["upd_model"].is_string())
    throw SchemaError("$: model ids must be strings");
  r.orig_model = j["orig_model"].get<std::string>();
  r.upd_model = j["upd_model"].get<std::string>();
  if (!j["threshold"].is_null()) r.threshold = real(j["threshold"], "$.threshold");
  const json& pairs = array(j["pairs"], "$.pairs");
  std::vector<MatchPair> parsed;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string path = "$.pairs[" + std::to_string(i) + "]";
    require_object(pairs[i], path, {"kind", "orig", "upd", "provenance", "order"}, {"score"});
    MatchPair p;
    const Kind k = kind_from_name(pairs[i]["kind"].get<std::string>());
    p.orig = {k, index(pairs[i]["orig"], path + ".orig")};
    p.upd = {k, index(pairs[i]["upd"], path + ".upd")};
    p.provenance = provenance_from_name(pairs[i]["provenance"].get<std::string>());
    p.order = index(pairs[i]["order"], path + ".order");
    if (pairs[i].contains("score")) p.score = real(pairs[i]["score"], path + ".score");
    parsed.push_back(p);
  }
  std::sort(parsed.begin(), parsed.end(), [](const MatchPair& a, const MatchPair& b) { return a.order < b.order; });
  for (const auto& p : parsed) r.matching.add(p.orig, p.upd, p.provenance, p.score);
  const json& trace = array(j["trace"], "$.trace");
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const std::string path = "$.trace[" + std::to_string(i) + "]";
    require_object(trace[i], path, {"iter", "kind", "orig", "upd", "score"});
    TraceStep t;
    const Kind k = kind_from_name(trace[i]["kind"].get<std::string>());
    t.iter = index(trace[i]["iter"], path + ".iter");
    t.orig = {k, index(trace[i]["orig"], path + ".orig")};
    t.upd = {k, index(trace[i]["upd"], path + ".upd")};
    t.score = real(trace[i]["score"], path + ".score");
    r.trace.push_back(t);
  }
  return r;
}

inline void save_match_record(const MatchRecord& r, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << match_record_to_json(r).dump() << "\n";
}

inline MatchRecord load_match_record(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  return match_record_from_json(j);
}

}  // namespace brepmatch
