#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "brepmatch/adjacency_prop.hpp"
#include "brepmatch/greedy_matcher.hpp"
#include "brepmatch/synth/dataset.hpp"

namespace brepmatch {

enum class Category : std::uint8_t { TruePositive, TrueNegative, Missed, Incorrect, FalsePositive };
inline constexpr std::array<Category, 5> kAllCategories{Category::TruePositive, Category::TrueNegative, Category::Missed,
                                                        Category::Incorrect, Category::FalsePositive};

inline std::string_view category_name(Category c) {
  switch (c) {
    case Category::TruePositive: return "true_positive";
    case Category::TrueNegative: return "true_negative";
    case Category::Missed: return "missed";
    case Category::Incorrect: return "incorrect";
    case Category::FalsePositive: return "false_positive";
  }
  return "?";
}

struct CategoryCounts {
  std::size_t total = 0;
  std::array<std::size_t, 5> counts{};
  // predicted provenance of true positives and of wrong labels
  std::map<Provenance, std::size_t> tp_by_provenance;
  std::map<Provenance, std::size_t> wrong_by_provenance;

  std::size_t operator[](Category c) const { return counts[static_cast<std::size_t>(c)]; }
  double percent(Category c) const { return total ? 100.0 * static_cast<double>((*this)[c]) / static_cast<double>(total) : 0.0; }
  std::size_t correct_label() const { return (*this)[Category::TruePositive] + (*this)[Category::TrueNegative]; }
  std::size_t incorrect_label() const { return (*this)[Category::Incorrect] + (*this)[Category::FalsePositive]; }
  double correct_percent() const { return total ? 100.0 * static_cast<double>(correct_label()) / static_cast<double>(total) : 0.0; }
  double incorrect_percent() const { return total ? 100.0 * static_cast<double>(incorrect_label()) / static_cast<double>(total) : 0.0; }
  bool partitions() const {
    std::size_t s = 0;
    for (auto c : counts) s += c;
    return s == total;
  }

  CategoryCounts& operator+=(const CategoryCounts& o) {
    total += o.total;
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    for (const auto& [p, n] : o.tp_by_provenance) tp_by_provenance[p] += n;
    for (const auto& [p, n] : o.wrong_by_provenance) wrong_by_provenance[p] += n;
    return *this;
  }
};

// Category counts of B_u entities per kind, plus their sum over kinds.
struct EvalReport {
  std::array<CategoryCounts, 3> kinds;

  const CategoryCounts& of(Kind k) const { return kinds[static_cast<std::size_t>(k)]; }
  CategoryCounts overall() const {
    CategoryCounts all;
    for (const auto& k : kinds) all += k;
    return all;
  }
  bool partitions() const {
    for (const auto& k : kinds)
      if (!k.partitions()) return false;
    return true;
  }
  EvalReport& operator+=(const EvalReport& o) {
    for (std::size_t i = 0; i < kinds.size(); ++i) kinds[i] += o.kinds[i];
    return *this;
  }
};

inline void check_refs(const Matching& m, const BRepGraph& bu, const char* what) {
  for (const auto& p : m.pairs())
    if (p.orig.kind != p.upd.kind || p.upd.index >= bu.count(p.upd.kind))
      throw ModelMismatch(std::string(what) + " matching does not refer to this updated model");
}

inline Category categorize(const Matching& predicted, const Matching& truth, EntityRef u) {
  const auto p = predicted.orig_of(u);
  const auto t = truth.orig_of(u);
  if (p && t) return *p == *t ? Category::TruePositive : Category::Incorrect;
  if (t) return Category::Missed;
  if (p) return Category::FalsePositive;
  return Category::TrueNegative;
}

inline EvalReport evaluate(const Matching& predicted, const Matching& truth, const BRepGraph& bu) {
  check_refs(predicted, bu, "predicted");
  check_refs(truth, bu, "ground-truth");
  EvalReport r;
  for (Kind k : kAllKinds) {
    CategoryCounts& c = r.kinds[static_cast<std::size_t>(k)];
    c.total = bu.count(k);
    for (std::size_t j = 0; j < c.total; ++j) {
      const EntityRef u{k, j};
      const Category cat = categorize(predicted, truth, u);
      ++c.counts[static_cast<std::size_t>(cat)];
      if (cat == Category::TruePositive) ++c.tp_by_provenance[predicted.pair_of_upd(u)->provenance];
      if (cat == Category::Incorrect || cat == Category::FalsePositive) ++c.wrong_by_provenance[predicted.pair_of_upd(u)->provenance];
    }
  }
  return r;
}

inline EvalReport evaluate(const MatchRecord& predicted, const MatchRecord& truth, const BRepGraph& bu) {
  if (predicted.orig_model != truth.orig_model || predicted.upd_model != truth.upd_model)
    throw ModelMismatch("matchings refer to different model pairs");
  if (!bu.model_id.empty() && bu.model_id != truth.upd_model) throw ModelMismatch("updated model id differs from the matching");
  return evaluate(predicted.matching, truth.matching, bu);
}

inline nlohmann::json counts_to_json(const CategoryCounts& c) {
  nlohmann::json j = {{"total", c.total}};
  for (Category cat : kAllCategories) {
    j["counts"][std::string(category_name(cat))] = c[cat];
    j["percent"][std::string(category_name(cat))] = c.percent(cat);
  }
  j["correct_label"] = c.correct_label();
  j["incorrect_label"] = c.incorrect_label();
  j["correct_label_percent"] = c.correct_percent();
  j["incorrect_label_percent"] = c.incorrect_percent();
  for (const auto& [p, n] : c.tp_by_provenance) j["true_positive_by_provenance"][std::string(provenance_name(p))] = n;
  for (const auto& [p, n] : c.wrong_by_provenance) j["incorrect_label_by_provenance"][std::string(provenance_name(p))] = n;
  return j;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  for (Kind k : kAllKinds) j[std::string(kind_name(k))] = counts_to_json(r.of(k));
  j["all"] = counts_to_json(r.overall());
  return j;
}

// ---- sweeps and baselines ---------------------------------------------------

struct SweepRow {
  double threshold = 0.0;
  EvalReport report;
};

// One matcher run per pair at the lowest threshold; higher thresholds are
// obtained by truncating its trace.
inline std::vector<SweepRow> sweep(const std::vector<const PairSample*>& pairs, const ModelParams& params,
                                   const std::vector<double>& thresholds, MatchOptions opt = {}) {
  if (thresholds.empty()) return {};
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) throw ValidationError("thresholds must be ascending");
  std::vector<const PairSample*> sorted = pairs;
  std::sort(sorted.begin(), sorted.end(), [](const PairSample* a, const PairSample* b) { return a->upd_id < b->upd_id; });
  std::vector<SweepRow> rows(thresholds.size());
  for (std::size_t i = 0; i < thresholds.size(); ++i) rows[i].threshold = thresholds[i];
  opt.threshold = thresholds.front();
  opt.pairs_per_rescore = 1;
  for (const PairSample* s : sorted) {
    const Matching full = match(*s->orig, *s->upd, &params, opt).matching;
    for (auto& row : rows) row.report += evaluate(truncate_to_threshold(full, row.threshold), s->truth, *s->upd);
  }
  return rows;
}

inline constexpr const char* kSweepCsvHeader =
    "threshold,kind,total,true_positive,true_negative,missed,incorrect,false_positive,correct_label_percent,incorrect_label_percent";

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << kSweepCsvHeader << "\n";
  for (const auto& row : rows) {
    auto line = [&](const std::string& kind, const CategoryCounts& c) {
      out << row.threshold << ',' << kind << ',' << c.total;
      for (Category cat : kAllCategories) out << ',' << c[cat];
      out << ',' << c.correct_percent() << ',' << c.incorrect_percent() << "\n";
    };
    for (Kind k : kAllKinds) line(std::string(kind_name(k)), row.report.of(k));
    line("all", row.report.overall());
  }
  return out.str();
}

inline nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : rows) j.push_back({{"threshold", row.threshold}, {"report", report_to_json(row.report)}});
  return j;
}

enum class Method : std::uint8_t { Coincidence, Overlap, Propagation, Learned };
inline constexpr std::array<Method, 4> kAllMethods{Method::Coincidence, Method::Overlap, Method::Propagation, Method::Learned};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::Coincidence: return "coincidence";
    case Method::Overlap: return "coincidence+overlap";
    case Method::Propagation: return "adjacency_propagation";
    case Method::Learned: return "learned";
  }
  return "?";
}

inline Matching run_method(Method method, const BRepGraph& bo, const BRepGraph& bu, const ModelParams* params,
                           const MatchOptions& opt = {}) {
  const double delta = opt.delta ? *opt.delta : default_delta(bo);
  switch (method) {
    case Method::Coincidence: return coincidence_match(bo, bu, delta);
    case Method::Overlap: return bootstrap_matching(bo, bu, delta, true);
    case Method::Propagation: return propagate(bo, bu, bootstrap_matching(bo, bu, delta, true), delta);
    case Method::Learned:
      if (!params) throw ValidationError("the learned matcher needs parameters");
      return match(bo, bu, params, opt).matching;
  }
  return {};
}

// Aggregated report per method over `pairs` (pairs visited in id order).
// The learned method is skipped without params.
inline std::map<Method, EvalReport> compare_baselines(const std::vector<const PairSample*>& pairs, const ModelParams* params,
                                                      const MatchOptions& opt = {}) {
  std::vector<const PairSample*> sorted = pairs;
  std::sort(sorted.begin(), sorted.end(), [](const PairSample* a, const PairSample* b) { return a->upd_id < b->upd_id; });
  std::map<Method, EvalReport> out;
  for (Method m : kAllMethods) {
    if (m == Method::Learned && !params) continue;
    EvalReport& r = out[m];
    for (const PairSample* s : sorted) r += evaluate(run_method(m, *s->orig, *s->upd, params, opt), s->truth, *s->upd);
  }
  return out;
}

inline std::string baselines_to_csv(const std::map<Method, EvalReport>& table) {
  std::ostringstream out;
  out.precision(17);
  out << "method,kind,total,true_positive,true_negative,missed,incorrect,false_positive,correct_label_percent,incorrect_label_percent\n";
  for (const auto& [m, r] : table) {
    auto line = [&](const std::string& kind, const CategoryCounts& c) {
      out << method_name(m) << ',' << kind << ',' << c.total;
      for (Category cat : kAllCategories) out << ',' << c[cat];
      out << ',' << c.correct_percent() << ',' << c.incorrect_percent() << "\n";
    };
    for (Kind k : kAllKinds) line(std::string(kind_name(k)), r.of(k));
    line("all", r.overall());
  }
  return out.str();
}

}  // namespace brepmatch
